#include "seqmark/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "csv.hpp"
#include "seqmark/config.hpp"
#include "seqmark/error.hpp"

namespace seqmark {

std::string encode_bits(double value) {
  char buf[17];
  const auto bits = std::bit_cast<std::uint64_t>(value);
  static constexpr char kDigits[] = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) buf[i] = kDigits[(bits >> (60 - 4 * i)) & 0xF];
  buf[16] = '\0';
  return buf;
}

double decode_bits(std::string_view hex) {
  std::uint64_t bits = 0;
  const auto* end = hex.data() + hex.size();
  const auto [ptr, ec] = std::from_chars(hex.data(), end, bits, 16);
  if (hex.size() != 16 || ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::corrupt_file, "bad value record '" + std::string(hex) + "'");
  }
  return std::bit_cast<double>(bits);
}

std::string serialize_checkpoint(const MarkerNet& net, const NormStats& norm) {
  RunConfig rc;
  rc.net = net.config();
  std::ostringstream out;
  out << "seqmark-checkpoint " << kCheckpointVersion << '\n';
  out << "marker " << net.marker() << '\n';
  for (const auto& key : net_config_keys()) out << "config " << key << " = " << rc.get(key) << '\n';
  for (std::size_t c = 0; c < norm.channels.size(); ++c) {
    out << "norm " << norm.channels[c] << ' ' << encode_bits(norm.mean[c]) << ' ' << encode_bits(norm.stddev[c])
        << '\n';
  }
  for (const auto& [name, tensor] : net.parameters()) {
    out << "param " << name << ' ' << tensor->rank();
    for (auto e : tensor->shape()) out << ' ' << e;
    for (double v : tensor->data()) out << ' ' << encode_bits(v);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

namespace {

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::size_t parse_extent(std::string_view text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw Error(ErrorCode::corrupt_file, "bad integer '" + std::string(text) + "'");
  return v;
}

}  // namespace

Checkpoint deserialize_checkpoint(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));  // no trailing newline: the file was cut
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty()) throw Error(ErrorCode::truncated_file, "empty checkpoint");
  if (lines.back() != "end" || text.back() != '\n') throw Error(ErrorCode::truncated_file, "checkpoint is truncated");

  const auto head = words(lines[0]);
  if (head.size() != 2 || head[0] != "seqmark-checkpoint") {
    throw Error(ErrorCode::corrupt_file, "not a seqmark checkpoint");
  }
  if (head[1] != std::to_string(kCheckpointVersion)) {
    throw Error(ErrorCode::version_mismatch, "checkpoint version " + std::string(head[1]) + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }

  std::string marker;
  RunConfig rc;
  NormStats norm;
  std::map<std::string, std::pair<Shape, std::vector<double>>, std::less<>> params;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const auto w = words(line);
    if (w.empty()) continue;
    if (w[0] == "marker" && w.size() == 2) {
      marker = w[1];
    } else if (w[0] == "config") {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos || w.size() < 3) throw Error(ErrorCode::corrupt_file, "bad config record");
      rc.set(csv::trim(line.substr(7, eq - 7)), line.substr(eq + 1));
    } else if (w[0] == "norm" && w.size() == 4) {
      norm.channels.emplace_back(w[1]);
      norm.mean.push_back(decode_bits(w[2]));
      norm.stddev.push_back(decode_bits(w[3]));
    } else if (w[0] == "param" && w.size() >= 3) {
      const std::size_t rank = parse_extent(w[2]);
      if (w.size() < 3 + rank) throw Error(ErrorCode::corrupt_file, "bad shape for " + std::string(w[1]));
      Shape shape;
      for (std::size_t r = 0; r < rank; ++r) shape.push_back(parse_extent(w[3 + r]));
      std::vector<double> values;
      for (std::size_t k = 3 + rank; k < w.size(); ++k) values.push_back(decode_bits(w[k]));
      if (values.size() != shape_size(shape)) {
        throw Error(ErrorCode::shape_mismatch, "parameter " + std::string(w[1]) + " declares " + to_string(shape) +
                                                   " but stores " + std::to_string(values.size()) + " values");
      }
      params.emplace(std::string(w[1]), std::make_pair(std::move(shape), std::move(values)));
    } else {
      throw Error(ErrorCode::corrupt_file, "unrecognized checkpoint line " + std::to_string(i + 1));
    }
  }
  if (marker.empty()) throw Error(ErrorCode::corrupt_file, "checkpoint has no marker name");
  if (norm.channels.size() != rc.net.input_channels) {
    throw Error(ErrorCode::shape_mismatch, "checkpoint stores " + std::to_string(norm.channels.size()) +
                                               " norm channels for a " + std::to_string(rc.net.input_channels) +
                                               "-channel network");
  }

  Checkpoint ck{MarkerNet::create(marker, rc.net, 0), std::move(norm)};
  auto slots = ck.net.parameters();
  if (slots.size() != params.size()) {
    throw Error(ErrorCode::shape_mismatch, "checkpoint has " + std::to_string(params.size()) +
                                               " parameters, network expects " + std::to_string(slots.size()));
  }
  for (auto& [name, tensor] : slots) {
    const auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::shape_mismatch, "checkpoint lacks parameter " + name);
    if (it->second.first != tensor->shape()) {
      throw Error(ErrorCode::shape_mismatch, "parameter " + name + " is " + to_string(it->second.first) +
                                                 ", network expects " + to_string(tensor->shape()));
    }
    *tensor = Tensor(it->second.first, std::move(it->second.second));
  }
  return ck;
}

void save_checkpoint(const MarkerNet& net, const NormStats& norm, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(net, norm);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace seqmark
