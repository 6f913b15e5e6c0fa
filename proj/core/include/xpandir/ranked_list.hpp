#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace xpandir {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// Retrieval result for one query, sorted by (score desc, doc_id asc).
/// Zero-score documents are never included.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;
    std::size_t depth = 0;  // the k_retrieve the list was cut at
};

}  // namespace xpandir
