#pragma once

#include <string>
#include <vector>

#include "vsum/types.hpp"

namespace vsum {

// Dataset file: UTF-8 JSON, 0-based shot/concept indices, deterministic key
// order. save_dataset is byte-stable for equal inputs.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

std::string dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const std::string& text);

// System summary files: {"summaries": [{"query", "video", "shots"}]}.
std::vector<Summary> load_summaries(const std::string& path);
void save_summaries(const std::vector<Summary>& summaries, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace vsum
