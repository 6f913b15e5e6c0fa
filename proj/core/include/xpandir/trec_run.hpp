#pragma once

#include <string>
#include <vector>

#include "xpandir/ranked_list.hpp"

namespace xpandir {

struct RunFile {
    std::vector<RankedList> lists;  // in file order
    std::string run_tag;
};

/// TREC run lines: `query_id Q0 doc_id rank score run_tag`, rank from 1,
/// score with 6 decimals, LF endings.
std::string emit_run(const std::vector<RankedList>& lists, const std::string& run_tag);
void write_run(const std::string& path, const std::vector<RankedList>& lists,
               const std::string& run_tag);

/// Parses a run file, validating the grammar, contiguous per-query blocks,
/// and 1-based consecutive ranks. Errors carry the offending line number.
RunFile load_run(const std::string& path);

}  // namespace xpandir
