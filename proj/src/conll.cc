#include "sdoh/conll.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "sdoh/errors.h"

namespace sdoh {
namespace {

constexpr std::string_view kDocStart = "-DOCSTART- ";
constexpr std::string_view kSyntheticPrefix = "# synthetic_id = ";

constexpr std::string_view kProvenanceNames[] = {
    "subset1", "subset2", "subset3", "full_corpus", "synthetic_host"};

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
      return true;
  }
  return false;
}

double parse_confidence(std::string_view field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || std::isnan(value)) {
    throw ParseError(line, "malformed confidence '" + std::string(field) + "'");
  }
  if (value < 0.0 || value > 1.0) {
    throw ParseError(line, "confidence outside [0,1]: " + std::string(field));
  }
  return value;
}

// Shared line scanner for the strict and permissive readers. `make_token` turns
// a (surface, label, confidence, line) record into the caller's token type.
template <typename Doc, typename MakeToken>
std::vector<Doc> scan_conll(std::string_view text, MakeToken make_token) {
  std::vector<Doc> docs;
  std::set<std::string, std::less<>> seen_ids;
  using SentenceT = typename decltype(Doc::sentences)::value_type;
  SentenceT pending;
  bool pending_open = false;
  std::size_t marker_line = 0;

  auto close_sentence = [&] {
    if (!pending_open) return;
    if (pending.tokens.empty()) {
      throw ParseError(marker_line, "synthetic_id marker without a sentence");
    }
    docs.back().sentences.push_back(std::move(pending));
    pending = SentenceT{};
    pending_open = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      close_sentence();
      continue;
    }
    if (line.find('\t') == std::string_view::npos) {
      if (line.starts_with(kDocStart)) {
        close_sentence();
        std::string_view rest = line.substr(kDocStart.size());
        std::string_view id = rest;
        Provenance prov = Provenance::kFullCorpus;
        if (auto sp = rest.find(' '); sp != std::string_view::npos) {
          id = rest.substr(0, sp);
          auto p = parse_provenance(rest.substr(sp + 1));
          if (!p) {
            throw ParseError(line_no, "unknown provenance '" +
                                          std::string(rest.substr(sp + 1)) + "'");
          }
          prov = *p;
        }
        if (id.empty()) throw ParseError(line_no, "empty document id");
        if (!seen_ids.emplace(id).second) {
          throw ParseError(line_no, "duplicate document id '" + std::string(id) + "'");
        }
        Doc doc;
        doc.id = std::string(id);
        doc.provenance = prov;
        docs.push_back(std::move(doc));
        continue;
      }
      if (line.starts_with(kSyntheticPrefix)) {
        if (docs.empty()) throw ParseError(line_no, "marker outside a document");
        if (pending_open) {
          throw ParseError(line_no, "synthetic_id marker inside a sentence");
        }
        std::string_view id = line.substr(kSyntheticPrefix.size());
        if (id.empty() || has_whitespace(id)) {
          throw ParseError(line_no, "malformed synthetic_id");
        }
        pending.synthetic_id = std::string(id);
        pending_open = true;
        marker_line = line_no;
        continue;
      }
      throw ParseError(line_no, "expected surface<TAB>label");
    }

    if (docs.empty()) throw ParseError(line_no, "token before -DOCSTART-");
    std::string_view fields[3];
    std::size_t n_fields = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (n_fields == 3) throw ParseError(line_no, "too many columns");
      fields[n_fields++] = line.substr(start, tab == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : tab - start);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (n_fields < 2) throw ParseError(line_no, "missing label column");
    if (fields[0].empty()) throw ParseError(line_no, "empty surface");
    if (has_whitespace(fields[0])) throw ParseError(line_no, "whitespace in surface");
    double conf = n_fields == 3 ? parse_confidence(fields[2], line_no) : 1.0;
    pending.tokens.push_back(make_token(fields[0], fields[1], conf, line_no));
    pending_open = true;
  }
  close_sentence();
  return docs;
}

void append_confidence(std::string& out, double conf) {
  if (conf == 1.0) return;
  char buf[32];
  int n = std::snprintf(buf, sizeof(buf), "\t%.4f", conf);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  return kProvenanceNames[static_cast<std::size_t>(p)];
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kProvenanceNames); ++i) {
    if (kProvenanceNames[i] == name) return static_cast<Provenance>(i);
  }
  return std::nullopt;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::size_t corpus_token_count(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& d : corpus) n += d.token_count();
  return n;
}

std::string Mention::text() const {
  std::string out;
  for (const auto& s : surfaces) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

Corpus parse_conll(std::string_view text) {
  return scan_conll<Document>(
      text, [](std::string_view surface, std::string_view label, double conf,
               std::size_t line) {
        auto parsed = BioLabel::parse(label);
        if (!parsed) throw UnknownLabelError(line, std::string(label));
        return Token{std::string(surface), *parsed, conf};
      });
}

RawCorpus parse_conll_raw(std::string_view text) {
  return scan_conll<RawDocument>(
      text, [](std::string_view surface, std::string_view label, double conf,
               std::size_t line) {
        if (label.empty()) throw ParseError(line, "empty label");
        return RawToken{std::string(surface), std::string(label), conf, line};
      });
}

std::string serialize_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus) {
    out += kDocStart;
    out += doc.id;
    if (doc.provenance != Provenance::kFullCorpus) {
      out += ' ';
      out += provenance_name(doc.provenance);
    }
    out += '\n';
    for (const auto& sentence : doc.sentences) {
      if (sentence.synthetic_id) {
        out += kSyntheticPrefix;
        out += *sentence.synthetic_id;
        out += '\n';
      }
      for (const auto& tok : sentence.tokens) {
        out += tok.surface;
        out += '\t';
        out += tok.label.str();
        append_confidence(out, tok.confidence);
        out += '\n';
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<BioViolation> validate_bio(std::span<const Token> tokens) {
  std::vector<BioViolation> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const BioLabel& label = tokens[i].label;
    if (!label.is_inside()) continue;
    if (i == 0 || tokens[i - 1].label.is_outside()) {
      out.push_back({i, BioViolationKind::kInsideWithoutBegin});
    } else if (tokens[i - 1].label.type() != label.type()) {
      out.push_back({i, BioViolationKind::kInsideTypeMismatch});
    }
  }
  return out;
}

void repair_bio_in_place(std::span<Token> tokens) {
  // Left to right: a repaired token becomes a valid predecessor for the next.
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    BioLabel& label = tokens[i].label;
    if (!label.is_inside()) continue;
    const bool ok = i > 0 && !tokens[i - 1].label.is_outside() &&
                    tokens[i - 1].label.type() == label.type();
    if (!ok) label = label.as_begin();
  }
}

Sentence repair_bio(Sentence sentence) {
  repair_bio_in_place(sentence.tokens);
  return sentence;
}

void repair_document(Document& doc) {
  for (auto& s : doc.sentences) repair_bio_in_place(s.tokens);
}

std::vector<Mention> mention_spans(const Sentence& sentence) {
  if (!validate_bio(sentence).empty()) {
    throw InvalidSchemeError("sentence violates the BIO scheme");
  }
  std::vector<Mention> out;
  const auto& toks = sentence.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!toks[i].label.is_begin()) continue;
    Mention m;
    m.type = toks[i].label.type();
    m.start = i;
    m.surfaces.push_back(toks[i].surface);
    while (i + 1 < toks.size() && toks[i + 1].label.is_inside()) {
      m.surfaces.push_back(toks[++i].surface);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Mention> corpus_mentions(const Corpus& corpus) {
  std::vector<Mention> out;
  for (const auto& doc : corpus) {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      for (auto& m : mention_spans(doc.sentences[s])) {
        m.document_id = doc.id;
        m.sentence_index = s;
        out.push_back(std::move(m));
      }
    }
  }
  return out;
}

std::vector<Window> segment_windows(const Document& doc, std::size_t max_tokens) {
  if (max_tokens == 0) throw ArgumentError("max_tokens must be >= 1");
  std::vector<Window> out;
  Window current;
  std::size_t offset = 0;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    out.push_back(std::move(current));
    current = Window{};
  };

  for (const auto& sentence : doc.sentences) {
    const auto& toks = sentence.tokens;
    if (current.tokens.size() + toks.size() <= max_tokens) {
      if (current.tokens.empty()) current.offset = offset;
      current.tokens.insert(current.tokens.end(), toks.begin(), toks.end());
      offset += toks.size();
      continue;
    }
    flush();
    if (toks.size() <= max_tokens) {
      current.offset = offset;
      current.tokens = toks;
      offset += toks.size();
      continue;
    }
    // Oversized sentence: full chunks are emitted, the remainder stays open.
    std::size_t i = 0;
    while (toks.size() - i > max_tokens) {
      Window w;
      w.offset = offset + i;
      w.tokens.assign(toks.begin() + static_cast<std::ptrdiff_t>(i),
                      toks.begin() + static_cast<std::ptrdiff_t>(i + max_tokens));
      repair_bio_in_place(w.tokens);
      out.push_back(std::move(w));
      i += max_tokens;
    }
    current.offset = offset + i;
    current.tokens.assign(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.end());
    repair_bio_in_place(current.tokens);
    offset += toks.size();
  }
  flush();
  return out;
}

}  // namespace sdoh
