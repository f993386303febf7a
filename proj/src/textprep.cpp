#include "dvrisk/textprep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dvrisk/error.hpp"
#include "dvrisk/resources.hpp"
#include "unicode.hpp"

namespace dvrisk::textprep {

namespace {

const std::string kPadToken = "<pad>";
const std::string kUnkToken = "<unk>";

}  // namespace

std::vector<TokenSpan> normalize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> tokens;
  TokenSpan current;
  bool in_token = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = unicode::decode_next(text, pos);
    const bool word_char = unicode::is_letter(cp) || unicode::is_digit(cp) || (in_token && unicode::is_combining_mark(cp));
    if (word_char) {
      if (!in_token) {
        current = TokenSpan{{}, start, 0};
        in_token = true;
      }
      unicode::append_utf8(current.text, unicode::fold_case(cp));
      current.length = pos - current.offset;
    } else if (in_token) {
      tokens.push_back(std::move(current));
      in_token = false;
    }
  }
  if (in_token) tokens.push_back(std::move(current));
  return tokens;
}

TokenList normalize(std::string_view text) {
  TokenList out;
  for (auto& span : normalize_with_offsets(text)) out.push_back(std::move(span.text));
  return out;
}

TokenList remove_stopwords(const TokenList& tokens, const StopList& stoplist) {
  TokenList out;
  out.reserve(tokens.size());
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out),
               [&](const std::string& token) { return !stoplist.contains(token); });
  return out;
}

StopList parse_stopwords(std::string_view text) {
  StopList words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with('#')) continue;
    for (auto& token : normalize(line)) words.insert(std::move(token));
  }
  return words;
}

const StopList& default_stopwords() {
  static const StopList words = parse_stopwords(resources::stopwords_pt());
  return words;
}

StopList load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_stopwords(buffer.str());
}

TokenList preprocess(std::string_view text, const StopList& stoplist) {
  return remove_stopwords(normalize(text), stoplist);
}

Vocabulary::Vocabulary() : id_to_token_{kPadToken, kUnkToken} {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : Vocabulary() {
  for (auto& token : tokens) {
    const auto id = static_cast<std::int32_t>(id_to_token_.size());
    if (!token_to_id_.emplace(token, id).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate vocabulary token '" + token + "'");
    }
    id_to_token_.push_back(std::move(token));
  }
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw Error(ErrorKind::IdOutOfRange, "token id " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::span<const std::string> Vocabulary::tokens() const {
  return std::span<const std::string>(id_to_token_).subspan(2);
}

std::string Vocabulary::to_json() const {
  nlohmann::json doc;
  doc["tokens"] = std::vector<std::string>(id_to_token_.begin() + 2, id_to_token_.end());
  return doc.dump();
}

Vocabulary Vocabulary::from_json(std::string_view json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    return Vocabulary(doc.at("tokens").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("vocabulary JSON: ") + e.what());
  }
}

namespace {

std::vector<std::pair<std::string, std::size_t>> ranked_counts(std::span<const TokenList> corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& token : doc) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

}  // namespace

Vocabulary fit_vocabulary(std::span<const TokenList> corpus, std::size_t max_size) {
  if (max_size < 3) throw Error(ErrorKind::InvalidArgument, "vocabulary max_size must be at least 3");
  auto ranked = ranked_counts(corpus);
  if (ranked.size() > max_size - 2) ranked.resize(max_size - 2);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, count] : ranked) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

EncodedText encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorKind::InvalidArgument, "max_len must be at least 1");
  EncodedText out;
  out.ids.assign(max_len, kPadId);
  const std::size_t keep = std::min(tokens.size(), max_len);
  const std::size_t first = tokens.size() - keep;
  for (std::size_t i = 0; i < keep; ++i) out.ids[i] = vocab.id(tokens[first + i]);
  out.true_length = keep;
  return out;
}

std::vector<std::pair<std::string, std::size_t>> word_frequencies(std::span<const TokenList> corpus) {
  return ranked_counts(corpus);
}

std::size_t default_max_len(std::span<const TokenList> corpus) {
  if (corpus.empty()) return 1;
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& doc : corpus) lengths.push_back(doc.size());
  std::sort(lengths.begin(), lengths.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(lengths.size())));
  const std::size_t value = lengths[std::max<std::size_t>(rank, 1) - 1];
  return std::clamp<std::size_t>(value, 1, 256);
}

}  // namespace dvrisk::textprep
