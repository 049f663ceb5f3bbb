#include "qnnv/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qnnv {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  return obj.at(key);
}

int64_t as_int(const json& v, const char* what) {
  if (!v.is_number_integer()) throw FormatError(std::string(what) + " must be an integer");
  return v.get<int64_t>();
}

QuantConfig config_from_json(const json& obj, const char* key) {
  const json& c = require(obj, key);
  const json& sign = require(c, "sign");
  if (!sign.is_string()) throw FormatError(std::string(key) + ".sign must be a string");
  Signedness s;
  if (sign == "+") {
    s = Signedness::kUnsigned;
  } else if (sign == "+-" || sign == "±") {
    s = Signedness::kSigned;
  } else {
    throw FormatError(std::string(key) + ".sign must be \"+\" or \"+-\"");
  }
  try {
    return QuantConfig(s, static_cast<int>(as_int(require(c, "Q"), "Q")), static_cast<int>(as_int(require(c, "F"), "F")));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(key) + ": " + e.what());
  }
}

nlohmann::ordered_json config_to_json(const QuantConfig& c) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  out["sign"] = c.is_signed() ? "+-" : "+";
  out["Q"] = c.total_bits();
  out["F"] = c.frac_bits();
  return out;
}

std::vector<std::size_t> read_arch(const json& doc) {
  const json& arch = require(doc, "arch");
  if (!arch.is_array() || arch.size() < 2) throw FormatError("arch must list at least two widths");
  std::vector<std::size_t> widths;
  for (const auto& w : arch) {
    int64_t v = as_int(w, "arch entry");
    if (v < 1) throw FormatError("arch entries must be positive");
    widths.push_back(static_cast<std::size_t>(v));
  }
  return widths;
}

void check_arch(const std::vector<std::size_t>& declared, const std::vector<std::size_t>& actual) {
  if (declared != actual) throw FormatError("arch does not match the layer shapes");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

Rational real_entry(const json& v) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.dump());
    if (v.is_number()) return parse_rational(v.dump());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  throw FormatError("real-valued entries must be decimal strings or numbers");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int64_t parse_int(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": expected an integer, got '" + text + "'");
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

QuantizedNetwork parse_qnn(const std::string& text) {
  const json doc = parse_json(text);
  const auto arch = read_arch(doc);
  QuantizedNetwork::Configs cfg{config_from_json(doc, "cfg_in"), config_from_json(doc, "cfg_w"),
                                config_from_json(doc, "cfg_b"), config_from_json(doc, "cfg_out_hidden"),
                                config_from_json(doc, "cfg_out_last")};
  const json& layers = require(doc, "layers");
  if (!layers.is_array()) throw FormatError("layers must be an array");
  std::vector<IntLayer> out;
  for (const auto& l : layers) {
    IntLayer layer;
    const json& w = require(l, "W");
    const json& b = require(l, "b");
    if (!w.is_array() || !b.is_array()) throw FormatError("W and b must be arrays");
    for (const auto& row : w) {
      if (!row.is_array()) throw FormatError("W must be a matrix");
      IntVector r;
      for (const auto& v : row) r.push_back(as_int(v, "weight"));
      layer.weights.push_back(std::move(r));
    }
    for (const auto& v : b) layer.bias.push_back(as_int(v, "bias"));
    out.push_back(std::move(layer));
  }
  QuantizedNetwork qnn;
  try {
    qnn = QuantizedNetwork(std::move(out), cfg);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  check_arch(arch, qnn.widths());
  return qnn;
}

QuantizedNetwork load_qnn(const std::filesystem::path& path) { return parse_qnn(read_text_file(path)); }

std::string qnn_to_json(const QuantizedNetwork& qnn) {
  // Compact rows keep matrices readable; the rest is laid out by hand so the
  // key order stays fixed.
  auto row = [](const IntVector& v) { return json(v).dump(); };
  std::ostringstream out;
  out << "{\n  \"arch\": " << json(qnn.widths()).dump() << ",\n";
  out << "  \"cfg_in\": " << config_to_json(qnn.cfg_in()).dump() << ",\n";
  out << "  \"cfg_w\": " << config_to_json(qnn.cfg_w()).dump() << ",\n";
  out << "  \"cfg_b\": " << config_to_json(qnn.cfg_b()).dump() << ",\n";
  out << "  \"cfg_out_hidden\": " << config_to_json(qnn.cfg_out_hidden()).dump() << ",\n";
  out << "  \"cfg_out_last\": " << config_to_json(qnn.cfg_out_last()).dump() << ",\n";
  out << "  \"layers\": [";
  for (std::size_t k = 0; k < qnn.layer_count(); ++k) {
    const auto& l = qnn.layers()[k];
    out << (k ? ",\n" : "\n") << "    {\n      \"W\": [";
    for (std::size_t j = 0; j < l.weights.size(); ++j) out << (j ? ", " : "") << row(l.weights[j]);
    out << "],\n      \"b\": " << row(l.bias) << "\n    }";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

RealNetwork parse_real_network(const std::string& text) {
  const json doc = parse_json(text);
  const auto arch = read_arch(doc);
  const json& layers = require(doc, "layers_real");
  if (!layers.is_array()) throw FormatError("layers_real must be an array");
  std::vector<RealLayer> out;
  for (const auto& l : layers) {
    RealLayer layer;
    const json& w = require(l, "W");
    const json& b = require(l, "b");
    if (!w.is_array() || !b.is_array()) throw FormatError("W and b must be arrays");
    for (const auto& r : w) {
      if (!r.is_array()) throw FormatError("W must be a matrix");
      RationalVector row;
      for (const auto& v : r) row.push_back(real_entry(v));
      layer.weights.push_back(std::move(row));
    }
    for (const auto& v : b) layer.bias.push_back(real_entry(v));
    out.push_back(std::move(layer));
  }
  RealNetwork dnn;
  try {
    dnn = RealNetwork(std::move(out));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  check_arch(arch, dnn.widths());
  return dnn;
}

RealNetwork load_real_network(const std::filesystem::path& path) { return parse_real_network(read_text_file(path)); }

std::vector<Sample> parse_dataset(std::istream& in, const QuantConfig& cfg_in, bool raw, std::size_t arity) {
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    const std::string where = "line " + std::to_string(line_no);
    auto cells = split_csv(line);
    if (cells.size() < 2) throw FormatError(where + ": expected a label and at least one value");
    Sample s;
    s.label = parse_int(cells[0], where);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (raw) {
        try {
          s.values.push_back(quantize_value(parse_rational(cells[i]), cfg_in));
        } catch (const std::invalid_argument&) {
          throw FormatError(where + ": malformed number '" + cells[i] + "'");
        }
      } else {
        int64_t v = parse_int(cells[i], where);
        if (!cfg_in.contains(v)) throw FormatError(where + ": value " + cells[i] + " is outside the input grid");
        s.values.push_back(v);
      }
    }
    if (arity != 0 && s.values.size() != arity) {
      throw FormatError(where + ": expected " + std::to_string(arity) + " values, got " +
                        std::to_string(s.values.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path, const QuantConfig& cfg_in, bool raw,
                                 std::size_t arity) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_dataset(in, cfg_in, raw, arity);
}

}  // namespace qnnv
