#include "sparqlgen/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using nlohmann::json;

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  // The nudge keeps values such as 0.845 (stored as 0.84499999...) rounding up.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string format_2dp(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(value, 2));
  return buf;
}

namespace {

json metrics_json(const MetricValues& v) {
  json j = json::object();
  for (size_t i = 0; i < MetricValues::kCount; ++i) j[MetricValues::name(i)] = v.get(i);
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json report_json(const PipelineResult& result) {
  const RunConfig& cfg = result.config;
  json runs = json::array();
  for (size_t r = 0; r < result.reports.size(); ++r) {
    const MetricReport& rep = result.reports[r];
    json items = json::array();
    for (size_t i = 0; i < rep.per_item.size(); ++i) {
      const ItemScore& s = rep.per_item[i];
      json item = {{"id", s.id},
                   {"BLEU-4", s.bleu4},
                   {"ROUGE-1", s.rouge1},
                   {"ROUGE-2", s.rouge2},
                   {"ROUGE-L", s.rouge_l},
                   {"status", to_string(s.status)},
                   {"non_empty", s.non_empty},
                   {"match", s.match}};
      if (r < result.breakdowns.size() && i < result.breakdowns[r].entries.size()) {
        item["category"] = to_string(result.breakdowns[r].entries[i].category);
      }
      items.push_back(std::move(item));
    }
    runs.push_back({{"run", r},
                    {"salt", run_salt(static_cast<int>(r))},
                    {"metrics", metrics_json(rep.values)},
                    {"counts",
                     {{"n_total", rep.n_total},
                      {"n_success", rep.n_success},
                      {"n_match", rep.n_match},
                      {"n_syntax_fail", rep.n_syntax_fail},
                      {"n_empty", rep.n_empty},
                      {"n_exec_fail", rep.n_exec_fail}}},
                    {"items", std::move(items)}});
  }

  json breakdown = json::array();
  for (size_t r = 0; r < result.breakdowns.size(); ++r) {
    const ErrorBreakdown& b = result.breakdowns[r];
    json counts = json::object();
    for (auto c : kAllCategories) counts[to_string(c)] = b.count(c);
    json entries = json::array();
    for (const auto& e : b.entries) {
      entries.push_back({{"id", e.id}, {"category", to_string(e.category)}, {"message", e.message}});
    }
    breakdown.push_back({{"run", r}, {"counts", counts}, {"items", entries}});
  }

  json names = json::array();
  for (size_t i = 0; i < MetricValues::kCount; ++i) names.push_back(MetricValues::name(i));

  return {{"tool_version", SPARQLGEN_VERSION},
          {"tokenizer_version", kTokenizerVersion},
          {"strategy", to_string(cfg.strategy)},
          {"model", cfg.generation.model_name},
          {"model_label", cfg.model_label},
          {"epoch", cfg.epoch},
          {"metric_names", names},
          {"runs", runs},
          {"n_runs", result.aggregate.runs},
          {"mean", metrics_json(result.aggregate.mean)},
          {"std", metrics_json(result.aggregate.std)},
          {"error_breakdown", breakdown},
          {"notes",
           "BLEU-4 uses add-epsilon smoothing and a brevity penalty; ROUGE scores are F1; both "
           "share the query tokenizer named above. Absolute values can differ slightly from "
           "other implementations of the same metrics."}};
}

std::string summary_table(const json& report) {
  std::ostringstream out;
  const auto& names = report.at("metric_names");
  auto row = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      out << (i ? " | " : "") << cells[i];
    }
    out << "\n";
  };

  std::vector<std::string> header = {"Strategy", "Model", "Epoch", "Run"};
  for (const auto& n : names) header.push_back(n.get<std::string>());
  row(header);

  const std::string strategy = report.at("strategy").get<std::string>();
  const std::string model = report.value("model_label", report.value("model", ""));
  const std::string epoch = report.value("epoch", "");
  for (const auto& run : report.at("runs")) {
    std::vector<std::string> cells = {strategy, model, epoch, std::to_string(run.at("run").get<int>())};
    for (const auto& n : names) cells.push_back(format_2dp(run.at("metrics").at(n.get<std::string>()).get<double>()));
    row(cells);
  }
  std::vector<std::string> agg = {strategy, model, epoch, "mean±std"};
  for (const auto& n : names) {
    const std::string key = n.get<std::string>();
    agg.push_back(format_2dp(report.at("mean").at(key).get<double>()) + "±" +
                  format_2dp(report.at("std").at(key).get<double>()));
  }
  row(agg);

  out << "\nError categories per run:\n";
  for (const auto& b : report.at("error_breakdown")) {
    out << "  run " << b.at("run").get<int>() << ":";
    for (auto c : kAllCategories) {
      out << " " << to_string(c) << "=" << b.at("counts").at(to_string(c)).get<size_t>();
    }
    out << "\n";
  }
  return out.str();
}

void emit_report(const PipelineResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());

  const json report = report_json(result);
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  write_file_atomic(dir / "manifest.json", to_json(result.manifest).dump(2) + "\n");
  write_file_atomic(dir / "summary.txt", summary_table(report));

  const RunConfig& cfg = result.config;
  std::string csv = "strategy,model,epoch,run";
  for (size_t i = 0; i < MetricValues::kCount; ++i) csv += std::string(",") + MetricValues::name(i);
  csv += "\n";
  auto metric_row = [&](const std::string& run, const MetricValues& v) {
    csv += csv_field(to_string(cfg.strategy)) + "," + csv_field(cfg.model_label) + "," +
           csv_field(cfg.epoch) + "," + run;
    for (size_t i = 0; i < MetricValues::kCount; ++i) csv += "," + csv_number(v.get(i));
    csv += "\n";
  };
  for (size_t r = 0; r < result.reports.size(); ++r) metric_row(std::to_string(r), result.reports[r].values);
  metric_row("mean", result.aggregate.mean);
  metric_row("std", result.aggregate.std);
  write_file_atomic(dir / "report.csv", csv);

  std::string errors = "run,id,category,message\n";
  for (size_t r = 0; r < result.breakdowns.size(); ++r) {
    for (const auto& e : result.breakdowns[r].entries) {
      errors += std::to_string(r) + "," + csv_field(e.id) + "," + to_string(e.category) + "," +
                csv_field(e.message) + "\n";
    }
  }
  write_file_atomic(dir / "errors.csv", errors);
}

}  // namespace sparqlgen
