#pragma once

#include <string_view>

// Files under resources/ compiled into the library.
namespace dvrisk::resources {

std::string_view stopwords_pt();
std::string_view default_lexicon_json();

}  // namespace dvrisk::resources
