#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace dvrisk::textprep {

using TokenList = std::vector<std::string>;
using StopList = std::unordered_set<std::string>;

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;

/// A normalized token plus the byte span it came from in the original text.
struct TokenSpan {
  std::string text;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Lowercases (simple case fold), turns every character that is not a letter,
/// digit or whitespace into a space, and splits on whitespace runs. Accents
/// are preserved.
TokenList normalize(std::string_view text);
std::vector<TokenSpan> normalize_with_offsets(std::string_view text);

TokenList remove_stopwords(const TokenList& tokens, const StopList& stoplist);

/// The embedded Portuguese stopword list (resources/stopwords_pt.txt).
const StopList& default_stopwords();
StopList parse_stopwords(std::string_view text);
StopList load_stopwords(const std::filesystem::path& path);

/// normalize followed by stopword removal: the classifier's token pipeline.
TokenList preprocess(std::string_view text, const StopList& stoplist);

/// Token <-> id map. Ids 0 and 1 are PAD and UNK; corpus tokens start at 2 in
/// descending frequency order, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary();
  /// Builds from the ordered token list for ids 2, 3, ...
  explicit Vocabulary(std::vector<std::string> tokens);

  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return id_to_token_.size(); }
  /// Tokens for ids >= 2, in id order.
  std::span<const std::string> tokens() const;

  std::string to_json() const;
  static Vocabulary from_json(std::string_view json_text);

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
};

Vocabulary fit_vocabulary(std::span<const TokenList> corpus, std::size_t max_size);

struct EncodedText {
  std::vector<std::int32_t> ids;
  std::size_t true_length = 0;
};

/// Maps unknown tokens to UNK, keeps the last `max_len` tokens, and pads with
/// PAD at the end.
EncodedText encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t max_len);

/// Exact counts, descending by count then lexicographic.
std::vector<std::pair<std::string, std::size_t>> word_frequencies(std::span<const TokenList> corpus);

/// Nearest-rank 95th percentile of token counts, clamped to [1, 256].
std::size_t default_max_len(std::span<const TokenList> corpus);

}  // namespace dvrisk::textprep
