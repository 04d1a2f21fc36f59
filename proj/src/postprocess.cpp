#include "sparqlgen/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/sparql/analysis.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

namespace {

bool is_word(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

// ---------------------------------------------------------------------------
// extract_query

struct KeywordHit {
  size_t pos;
  bool upper;
  bool line_start;
};

std::vector<KeywordHit> find_keywords(std::string_view text) {
  std::vector<KeywordHit> hits;
  const std::string lower = to_lower(text);
  for (std::string_view kw : {"select", "prefix"}) {
    for (size_t p = lower.find(kw); p != std::string::npos; p = lower.find(kw, p + 1)) {
      const size_t end = p + kw.size();
      if (p > 0 && is_word(text[p - 1])) continue;
      if (end < text.size() && is_word(text[end])) continue;
      const std::string_view word = text.substr(p, kw.size());
      size_t q = p;
      while (q > 0 && (text[q - 1] == ' ' || text[q - 1] == '\t')) --q;
      hits.push_back({p, word == to_upper(word), q == 0 || text[q - 1] == '\n'});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.pos < b.pos; });
  return hits;
}

// Prose often says "select" too, so an uppercase keyword opening a line wins.
std::optional<size_t> query_start(std::string_view text) {
  const auto hits = find_keywords(text);
  if (hits.empty()) return std::nullopt;
  const std::array<bool (*)(const KeywordHit&), 3> tiers = {
      [](const KeywordHit& h) { return h.upper && h.line_start; },
      [](const KeywordHit& h) { return h.upper; },
      [](const KeywordHit& h) { return h.line_start; },
  };
  for (auto tier : tiers) {
    for (const auto& h : hits) {
      if (tier(h)) return h.pos;
    }
  }
  return hits.front().pos;
}

bool starts_with_modifier(std::string_view line) {
  const std::string upper = to_upper(trim(line));
  for (std::string_view kw : {"ORDER BY", "GROUP BY", "LIMIT", "OFFSET", "HAVING"}) {
    if (upper.starts_with(kw)) return true;
  }
  return false;
}

std::string extract_span(std::string_view text, size_t start) {
  const size_t close = text.rfind('}');
  if (close == std::string_view::npos || close < start) return std::string(trim(text.substr(start)));

  size_t end = close + 1;
  size_t line_begin = end;
  while (line_begin < text.size()) {
    size_t nl = text.find('\n', line_begin);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(line_begin, nl - line_begin);
    if (!trim(line).empty()) {
      if (!starts_with_modifier(line)) break;
      end = nl;
    }
    line_begin = nl + 1;
  }
  return std::string(trim(text.substr(start, end - start)));
}

// ---------------------------------------------------------------------------
// clean

// Marks bytes inside string literals, IRIs and comments.
std::vector<bool> protected_mask(std::string_view s) {
  std::vector<bool> mask(s.size(), false);
  size_t i = 0;
  auto mark = [&](size_t from, size_t to) {
    for (size_t k = from; k < to && k < s.size(); ++k) mask[k] = true;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '"' || c == '\'') {
      const bool triple = s.substr(i, 3) == std::string(3, c);
      size_t j = i + (triple ? 3 : 1);
      while (j < s.size()) {
        if (s[j] == '\\') {
          j += 2;
          continue;
        }
        if (!triple && s[j] == '\n') break;
        if (s[j] == c && (!triple || s.substr(j, 3) == std::string(3, c))) {
          j += triple ? 3 : 1;
          break;
        }
        ++j;
      }
      mark(i, j);
      i = j;
    } else if (c == '<') {
      size_t j = i + 1;
      while (j < s.size() && s[j] != '>' &&
             std::string_view(" \t\r\n<\"{}|^`\\").find(s[j]) == std::string_view::npos) {
        ++j;
      }
      if (j < s.size() && s[j] == '>') {
        mark(i, j + 1);
        i = j + 1;
      } else {
        ++i;
      }
    } else if (c == '#') {
      size_t j = s.find('\n', i);
      if (j == std::string_view::npos) j = s.size();
      mark(i, j);
      i = j;
    } else {
      ++i;
    }
  }
  return mask;
}

std::string rule_line_endings(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out += '\n';
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

bool is_wrapper(char c) { return c == '`' || c == '"' || c == '\''; }

std::string rule_unwrap(std::string_view s) {
  std::string_view t = trim(s);
  bool stripped = false;
  if (!t.empty() && is_wrapper(t.front())) {
    const bool fence = t.front() == '`';
    while (!t.empty() && is_wrapper(t.front())) t.remove_prefix(1);
    if (fence && to_lower(t.substr(0, 6)) == "sparql" &&
        (t.size() == 6 || std::isspace(static_cast<unsigned char>(t[6])))) {
      t.remove_prefix(6);
    }
    stripped = true;
  }
  if (!t.empty() && is_wrapper(t.back())) {
    while (!t.empty() && is_wrapper(t.back())) t.remove_suffix(1);
    stripped = true;
  }
  return stripped ? std::string(trim(t)) : std::string(s);
}

std::string rule_glued_variables(std::string_view s) {
  const auto mask = protected_mask(s);
  std::string out;
  out.reserve(s.size() + 8);
  size_t i = 0;
  while (i < s.size()) {
    const bool var_start = !mask[i] && (s[i] == '?' || s[i] == '$') && i + 1 < s.size() &&
                           is_word(s[i + 1]);
    if (!var_start) {
      out += s[i++];
      continue;
    }
    size_t j = i + 1;
    while (j < s.size() && is_word(s[j])) ++j;
    out.append(s.substr(i, j - i));
    if (j + 1 < s.size() && !mask[j] && (s[j] == '?' || s[j] == '$') && is_word(s[j + 1])) {
      out += ' ';
    }
    i = j;
  }
  return out;
}

std::string rule_brace_spacing(std::string_view s) {
  const auto mask = protected_mask(s);
  std::string out;
  out.reserve(s.size() + 8);
  for (size_t i = 0; i < s.size(); ++i) {
    if (!mask[i] && s[i] == '{' && i > 0 && is_word(s[i - 1])) out += ' ';
    out += s[i];
    if (!mask[i] && s[i] == '}' && i + 1 < s.size() && is_word(s[i + 1])) out += ' ';
  }
  return out;
}

std::string rule_trailing_terminator(std::string_view s) {
  const auto mask = protected_mask(s);
  std::vector<bool> keep(s.size(), true);
  size_t i = s.size();
  while (i > 0) {
    const char c = s[i - 1];
    if (std::isspace(static_cast<unsigned char>(c))) {
      --i;
    } else if ((c == ';' || c == '.') && !mask[i - 1]) {
      keep[i - 1] = false;
      --i;
    } else {
      break;
    }
  }
  std::string result;
  result.reserve(s.size());
  for (size_t k = 0; k < s.size(); ++k) {
    if (keep[k]) result += s[k];
  }
  return result;
}

std::string rule_blank_runs(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool prev_blank = false;
  size_t pos = 0;
  while (true) {
    const size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.append(s.substr(pos));
      break;
    }
    const std::string_view line = s.substr(pos, nl - pos);
    const bool blank = trim(line).empty();
    if (!(blank && prev_blank)) {
      out.append(line);
      out += '\n';
    }
    prev_blank = blank;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::string extract_query(std::string_view raw) {
  if (find_keywords(raw).empty()) throw NoQueryFound("no SELECT or PREFIX keyword in model output");

  for (size_t open = raw.find("```"); open != std::string_view::npos;) {
    size_t content = raw.find('\n', open + 3);
    if (content == std::string_view::npos) break;
    ++content;
    size_t close = raw.find("```", content);
    const std::string_view body =
        raw.substr(content, close == std::string_view::npos ? std::string_view::npos : close - content);
    if (!find_keywords(body).empty()) return std::string(trim(body));
    if (close == std::string_view::npos) break;
    open = raw.find("```", close + 3);
  }

  return extract_span(raw, *query_start(raw));
}

CleaningReport clean(std::string_view query) {
  using Rule = std::string (*)(std::string_view);
  static const std::array<std::pair<const char*, Rule>, 6> rules = {{
      {"r1", rule_line_endings},
      {"r2", rule_unwrap},
      {"r3", rule_glued_variables},
      {"r4", rule_brace_spacing},
      {"r5", rule_trailing_terminator},
      {"r6", rule_blank_runs},
  }};

  CleaningReport report;
  report.input = std::string(query);
  std::string text(query);
  std::vector<bool> fired(rules.size(), false);
  // Some rules expose work for earlier ones (r5 can uncover a wrapping
  // backtick), so passes repeat until nothing changes. That also makes the
  // result idempotent.
  for (int pass = 0; pass < 8; ++pass) {
    bool any = false;
    for (size_t r = 0; r < rules.size(); ++r) {
      std::string next = rules[r].second(text);
      if (next != text) {
        fired[r] = true;
        any = true;
        text = std::move(next);
      }
    }
    if (!any) break;
  }
  for (size_t r = 0; r < rules.size(); ++r) {
    if (fired[r]) report.rules_applied.emplace_back(rules[r].first);
  }
  report.changed = text != query;
  report.output = std::move(text);
  return report;
}

std::string format_diagnostics(const std::vector<sparql::Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += '\n';
    out += sparql::to_string(d.code);
    out += ": ";
    out += d.message;
  }
  return out;
}

PromptInstance build_correction_prompt(std::string_view query,
                                       const std::vector<sparql::Diagnostic>& diagnostics,
                                       const PromptTemplates& templates) {
  const std::string diag_text = format_diagnostics(diagnostics);
  const std::string q(trim(query));
  const std::pair<std::string_view, std::string_view> values[] = {{"query", q},
                                                                  {"diagnostics", diag_text}};
  PromptInstance p;
  p.user_text = fill_template(templates.correction, values);
  return p;
}

CorrectionResult llm_correct(std::string_view query,
                             const std::vector<sparql::Diagnostic>& diagnostics,
                             const Generator& generator, const PromptTemplates& templates) {
  if (diagnostics.empty()) throw PreconditionError("llm_correct: no diagnostics to correct");
  if (sparql::check_query(query).valid()) throw PreconditionError("llm_correct: query is already valid");
  CorrectionResult result;
  result.query = std::string(query);

  const std::string reply = generator(build_correction_prompt(query, diagnostics, templates));
  std::string candidate;
  try {
    candidate = clean(extract_query(reply)).output;
  } catch (const NoQueryFound&) {
    result.failure = "correction reply contains no query";
    return result;
  }
  const auto check = sparql::check_query(candidate);
  if (!check.valid()) {
    result.failure = "corrected query is still invalid: " + format_diagnostics(check.diagnostics);
    return result;
  }
  result.query = std::move(candidate);
  result.corrected = true;
  return result;
}

}  // namespace sparqlgen
