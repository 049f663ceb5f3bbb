#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnnv/network.hpp"

namespace qnnv {

// Malformed model, dataset or task files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quantized model JSON: arch, cfg_in, cfg_w, cfg_b, cfg_out_hidden,
// cfg_out_last ({"sign": "+" | "+-", "Q": int, "F": int}) and layers
// ([{"W": [[int]], "b": [int]}]). Off-grid parameters are rejected.
QuantizedNetwork parse_qnn(const std::string& text);
QuantizedNetwork load_qnn(const std::filesystem::path& path);
// Pretty-printed, keys in a fixed order.
std::string qnn_to_json(const QuantizedNetwork& qnn);

// Real model JSON: arch and layers_real ([{"W": [["0.58", ...]], "b": [...]}]);
// entries are decimal strings or JSON numbers.
RealNetwork parse_real_network(const std::string& text);
RealNetwork load_real_network(const std::filesystem::path& path);

struct Sample {
  int64_t label = 0;  // class label, 1-based
  IntVector values;
};

// CSV, one sample per line: label, v_1, ..., v_n. Blank lines and lines
// starting with '#' are skipped. With `raw` the values are real numbers
// quantized with `cfg_in`; otherwise they must be integers on the grid.
// `arity` 0 skips the width check.
std::vector<Sample> parse_dataset(std::istream& in, const QuantConfig& cfg_in, bool raw, std::size_t arity = 0);
std::vector<Sample> load_dataset(const std::filesystem::path& path, const QuantConfig& cfg_in, bool raw,
                                 std::size_t arity = 0);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace qnnv
