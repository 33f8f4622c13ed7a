// SPDX-License-Identifier: Apache-2.0
#include "htlab/extract.hpp"

#include <algorithm>
#include <cctype>

#include "htlab/errors.hpp"
#include "htlab/text.hpp"

namespace htlab {

namespace {

enum class HeaderKind { code, explanation, taxonomy };

struct Header {
  HeaderKind kind;
  size_t line_start;     // first byte of the header token (after indentation)
  size_t content_start;  // first byte after the colon and adornments
};

struct Span {
  size_t begin = 0;
  size_t end = 0;  // half-open
  bool valid() const { return end > begin; }
};

bool is_md_adornment(char c) { return c == '*' || c == '#' || c == '>' || c == '-' || c == '_'; }

// Matches "Code:" / "Explanation:" / "Taxonomy:" at a line start, tolerating
// markdown adornments such as "**Code:**" and arbitrary case.
bool match_header_at(std::string_view text, size_t line_begin, Header* out) {
  size_t i = line_begin;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  size_t deco = i;
  while (deco < text.size() && (is_md_adornment(text[deco]) || text[deco] == ' ')) ++deco;

  static constexpr struct { const char* word; HeaderKind kind; } kKeywords[] = {
      {"code", HeaderKind::code},
      {"explanation", HeaderKind::explanation},
      {"taxonomy", HeaderKind::taxonomy},
  };
  for (const auto& kw : kKeywords) {
    std::string_view rest = text.substr(deco);
    size_t klen = std::char_traits<char>::length(kw.word);
    if (!starts_with_ci(rest, kw.word)) continue;
    size_t j = deco + klen;
    while (j < text.size() && text[j] == '*') ++j;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    if (j >= text.size() || text[j] != ':') continue;
    ++j;
    while (j < text.size() && text[j] == '*') ++j;
    out->kind = kw.kind;
    out->line_start = i;
    out->content_start = j;
    return true;
  }
  return false;
}

std::vector<Header> find_headers(std::string_view text) {
  std::vector<Header> headers;
  size_t line_begin = 0;
  while (line_begin <= text.size()) {
    Header h;
    if (line_begin < text.size() && match_header_at(text, line_begin, &h)) headers.push_back(h);
    size_t nl = text.find('\n', line_begin);
    if (nl == std::string_view::npos) break;
    line_begin = nl + 1;
  }
  return headers;
}

bool is_word_boundary(std::string_view text, size_t pos, size_t len) {
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  if (pos > 0 && is_word(text[pos - 1])) return false;
  if (pos + len < text.size() && is_word(text[pos + len])) return false;
  return true;
}

size_t find_word(std::string_view text, std::string_view word, size_t from) {
  size_t pos = from;
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    if (is_word_boundary(text, pos, word.size())) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

size_t rfind_word(std::string_view text, std::string_view word) {
  size_t best = std::string_view::npos;
  size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    if (is_word_boundary(text, pos, word.size())) best = pos;
    ++pos;
  }
  return best;
}

Span trim_span(std::string_view text, Span s) {
  while (s.begin < s.end && std::isspace(static_cast<unsigned char>(text[s.begin]))) ++s.begin;
  while (s.end > s.begin && std::isspace(static_cast<unsigned char>(text[s.end - 1]))) --s.end;
  return s;
}

// Narrows a fenced block to its interior. Returns invalid span when no fence.
Span fence_interior(std::string_view text, size_t from, size_t to) {
  size_t open = text.find("```", from);
  if (open == std::string_view::npos || open >= to) return {};
  size_t body = text.find('\n', open + 3);
  if (body == std::string_view::npos || body >= to) return {};
  ++body;
  size_t close = text.find("```", body);
  size_t end = (close == std::string_view::npos || close > to) ? to : close;
  return {body, end};
}

Span locate_code(std::string_view text, const std::vector<Header>& headers,
                 std::vector<std::string>* warnings) {
  // Strategy 1: Code: header block.
  for (size_t hi = 0; hi < headers.size(); ++hi) {
    if (headers[hi].kind != HeaderKind::code) continue;
    size_t block_end = text.size();
    if (hi + 1 < headers.size()) block_end = headers[hi + 1].line_start;
    Span block = trim_span(text, {headers[hi].content_start, block_end});
    if (!block.valid()) break;  // empty Code: block; fall through to other strategies
    if (text[block.begin] == '<') {
      size_t last_gt = text.rfind('>', block.end - 1);
      if (last_gt != std::string_view::npos && last_gt > block.begin)
        return trim_span(text, {block.begin + 1, last_gt});
    }
    Span fenced = fence_interior(text, block.begin, block.end);
    if (fenced.valid()) return fenced;
    return block;
  }
  // Strategy 2: first fenced block anywhere.
  Span fenced = fence_interior(text, 0, text.size());
  if (fenced.valid() && trim_span(text, fenced).valid()) {
    warnings->push_back("code located by fenced block, no Code header");
    return fenced;
  }
  // Strategy 3: outermost module...endmodule.
  size_t mod = find_word(text, "module", 0);
  size_t endmod = rfind_word(text, "endmodule");
  if (mod != std::string_view::npos && endmod != std::string_view::npos && mod < endmod) {
    warnings->push_back("code located by module scan, no Code header");
    return {mod, endmod + 9};
  }
  return {};
}

}  // namespace

Taxonomy parse_taxonomy(std::string_view raw) {
  Taxonomy t;
  t.raw = std::string(raw);
  auto parts = split(raw, ';');
  auto get = [&](size_t i) { return i < parts.size() ? trim(parts[i]) : std::string(); };
  t.design_phase = get(0);
  t.activation_and_effects = get(1);
  t.location = get(2);
  t.characteristics = get(3);
  return t;
}

ExtractedArtifact extract_sections(std::string_view text) {
  ExtractedArtifact art;
  auto headers = find_headers(text);

  Span code = locate_code(text, headers, &art.extraction_warnings);
  if (!code.valid() || trim(text.substr(code.begin, code.end - code.begin)).empty())
    throw Error(Errc::no_code_found, "no strategy located RTL in response");

  auto inside_code = [&](size_t pos) { return pos >= code.begin && pos < code.end; };

  // Headers whose token lies inside the code block are payload, not markers.
  std::vector<Header> live;
  for (const auto& h : headers)
    if (!inside_code(h.line_start)) live.push_back(h);

  auto section_span = [&](HeaderKind kind) -> Span {
    for (size_t i = 0; i < live.size(); ++i) {
      if (live[i].kind != kind) continue;
      size_t begin = live[i].content_start;
      size_t end = text.size();
      if (i + 1 < live.size()) end = live[i + 1].line_start;
      if (code.begin >= begin && code.begin < end) end = code.begin;
      if (begin > end) end = begin;
      return {begin, end};
    }
    return {};
  };

  Span expl = section_span(HeaderKind::explanation);
  Span taxo = section_span(HeaderKind::taxonomy);

  Span expl_t = trim_span(text, expl);
  Span taxo_t = trim_span(text, taxo);
  art.infected_rtl = std::string(text.substr(code.begin, code.end - code.begin));
  art.explanation = std::string(text.substr(expl_t.begin, expl_t.end - expl_t.begin));
  art.taxonomy =
      parse_taxonomy(text.substr(taxo_t.begin, taxo_t.end - taxo_t.begin));

  bool have_expl = false, have_taxo = false;
  for (const auto& h : live) {
    have_expl |= h.kind == HeaderKind::explanation;
    have_taxo |= h.kind == HeaderKind::taxonomy;
  }
  if (!have_expl) art.extraction_warnings.push_back("missing Explanation");
  if (!have_taxo) art.extraction_warnings.push_back("missing Taxonomy");

  // Residual: every byte outside the three claimed content spans, in order.
  std::vector<Span> claimed;
  for (Span s : {code, expl, taxo})
    if (s.valid()) claimed.push_back(s);
  std::sort(claimed.begin(), claimed.end(), [](const Span& a, const Span& b) {
    return a.begin < b.begin;
  });
  size_t cursor = 0;
  for (const Span& s : claimed) {
    if (s.begin > cursor) art.residual_text += std::string(text.substr(cursor, s.begin - cursor));
    cursor = std::max(cursor, s.end);
  }
  if (cursor < text.size()) art.residual_text += std::string(text.substr(cursor));
  return art;
}

std::string strip_verilog_comments(std::string_view code) {
  std::string out(code);
  enum class State { normal, line_comment, block_comment, string_lit } state = State::normal;
  for (size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    char next = i + 1 < out.size() ? out[i + 1] : '\0';
    switch (state) {
      case State::normal:
        if (c == '/' && next == '/') { state = State::line_comment; out[i] = ' '; }
        else if (c == '/' && next == '*') { state = State::block_comment; out[i] = ' '; }
        else if (c == '"') { state = State::string_lit; out[i] = ' '; }
        break;
      case State::line_comment:
        if (c == '\n') state = State::normal;
        else out[i] = ' ';
        break;
      case State::block_comment:
        if (c == '*' && next == '/') { out[i] = ' '; out[i + 1] = ' '; ++i; state = State::normal; }
        else if (c != '\n') out[i] = ' ';
        break;
      case State::string_lit:
        if (c == '"') { out[i] = ' '; state = State::normal; }
        else if (c == '\\') { out[i] = ' '; if (next) { out[i + 1] = ' '; ++i; } }
        else if (c != '\n') out[i] = ' ';
        break;
    }
  }
  return out;
}

namespace {

std::vector<std::pair<size_t, std::string>> identifier_tokens(std::string_view stripped) {
  std::vector<std::pair<size_t, std::string>> tokens;
  size_t i = 0;
  auto is_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_body = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  };
  while (i < stripped.size()) {
    if (is_start(stripped[i])) {
      size_t b = i;
      while (i < stripped.size() && is_body(stripped[i])) ++i;
      tokens.emplace_back(b, std::string(stripped.substr(b, i - b)));
    } else {
      ++i;
    }
  }
  return tokens;
}

}  // namespace

std::vector<std::string> declared_modules(std::string_view code) {
  std::string stripped = strip_verilog_comments(code);
  auto tokens = identifier_tokens(stripped);
  std::vector<std::string> names;
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].second == "module" || tokens[i].second == "macromodule")
      names.push_back(tokens[i + 1].second);
  }
  return names;
}

std::vector<std::string> module_input_ports(std::string_view code, std::string_view module_name) {
  std::string stripped = strip_verilog_comments(code);
  auto tokens = identifier_tokens(stripped);

  size_t body_begin = std::string::npos, body_end = stripped.size();
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].second == "module" && tokens[i + 1].second == module_name) {
      body_begin = tokens[i + 1].first;
      for (size_t j = i + 2; j < tokens.size(); ++j) {
        if (tokens[j].second == "endmodule" || tokens[j].second == "module") {
          body_end = tokens[j].first;
          break;
        }
      }
      break;
    }
  }
  if (body_begin == std::string::npos) return {};

  std::vector<std::string> ports;
  std::string_view body(stripped.data() + body_begin, body_end - body_begin);
  auto body_tokens = identifier_tokens(body);
  auto is_qualifier = [](const std::string& t) {
    return t == "wire" || t == "reg" || t == "logic" || t == "signed" || t == "unsigned";
  };
  auto is_decl_keyword = [](const std::string& t) {
    return t == "input" || t == "output" || t == "inout" || t == "wire" || t == "reg" ||
           t == "logic" || t == "parameter" || t == "localparam";
  };
  for (size_t i = 0; i < body_tokens.size(); ++i) {
    if (body_tokens[i].second != "input") continue;
    size_t pos = body_tokens[i].first + 5;
    while (pos < body.size()) {
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      if (pos >= body.size()) break;
      if (body[pos] == '[') {  // vector range; may reference parameters
        size_t close = body.find(']', pos);
        if (close == std::string_view::npos) break;
        pos = close + 1;
        continue;
      }
      if (!(std::isalpha(static_cast<unsigned char>(body[pos])) || body[pos] == '_')) break;
      size_t b = pos;
      while (pos < body.size() && (std::isalnum(static_cast<unsigned char>(body[pos])) ||
                                   body[pos] == '_' || body[pos] == '$'))
        ++pos;
      std::string tok(body.substr(b, pos - b));
      if (is_qualifier(tok)) continue;
      if (is_decl_keyword(tok)) { pos = b; break; }  // next declaration begins
      ports.push_back(tok);
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      if (pos < body.size() && body[pos] == ',') { ++pos; continue; }
      break;  // ';', ')', '=' or anything else ends this declaration
    }
  }
  return ports;
}

std::vector<std::string> validate_rtl_shape(std::string_view code, std::string_view top_module) {
  std::vector<std::string> warnings;
  std::string stripped = strip_verilog_comments(code);
  auto tokens = identifier_tokens(stripped);

  int modules = 0, endmodules = 0;
  bool top_found = false, initial_seen = false;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i].second;
    if (t == "module" || t == "macromodule") {
      ++modules;
      if (i + 1 < tokens.size() && tokens[i + 1].second == top_module) top_found = true;
    } else if (t == "endmodule") {
      ++endmodules;
    } else if (t == "initial") {
      initial_seen = true;
    }
  }
  if (modules != endmodules)
    warnings.push_back("module/endmodule imbalance: " + std::to_string(modules) + " module vs " +
                       std::to_string(endmodules) + " endmodule");
  if (!top_module.empty() && !top_found)
    warnings.push_back("top module '" + std::string(top_module) + "' not declared");
  if (initial_seen)
    warnings.push_back("non-synthesizable construct: initial block");

  for (size_t i = 0; i + 1 < stripped.size(); ++i) {
    if (stripped[i] != '#') continue;
    size_t j = i + 1;
    while (j < stripped.size() && (stripped[j] == ' ' || stripped[j] == '\t')) ++j;
    if (j < stripped.size() && std::isdigit(static_cast<unsigned char>(stripped[j]))) {
      warnings.push_back("non-synthesizable construct: delay (#)");
      break;
    }
  }
  return warnings;
}

}  // namespace htlab
