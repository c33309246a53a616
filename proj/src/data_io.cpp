#include "seqmark/data_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "csv.hpp"
#include "seqmark/error.hpp"

namespace seqmark {

namespace fs = std::filesystem;

const MarkerPick* Dataset::find_pick(std::string_view well_id, std::string_view marker) const {
  for (const auto& p : picks) {
    if (p.well_id == well_id && p.marker == marker) return &p;
  }
  return nullptr;
}

std::vector<std::string> Dataset::markers() const {
  std::vector<std::string> names;
  for (const auto& p : picks) {
    if (std::find(names.begin(), names.end(), p.marker) == names.end()) names.push_back(p.marker);
  }
  return names;
}

std::string canonical_channel(std::string_view name) {
  std::string upper;
  for (char c : csv::trim(name)) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper == "GR" || upper == "RES" || upper == "DEN") return upper;
  throw Error(ErrorCode::invalid_argument, "unknown log channel '" + std::string(name) + "' (expected GR, RES, DEN)");
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  return out;
}

bool is_gap(std::string_view cell) {
  cell = csv::trim(cell);
  return cell.empty() || cell == "nan" || cell == "NaN" || cell == "NAN";
}

void fill_gaps(std::vector<double>& column, const std::vector<bool>& gap, const std::string& where) {
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (!gap[i]) known.push_back(i);
  }
  if (known.empty()) throw Error(ErrorCode::non_numeric_cell, where + ": channel has no numeric samples");
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (!gap[i]) continue;
    const auto hi = std::lower_bound(known.begin(), known.end(), i);
    if (hi == known.begin()) {
      column[i] = column[*hi];
    } else if (hi == known.end()) {
      column[i] = column[known.back()];
    } else {
      const std::size_t a = *(hi - 1), b = *hi;
      const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
      column[i] = column[a] + w * (column[b] - column[a]);
    }
  }
}

}  // namespace

WellLog load_well_csv(const fs::path& path, const WellLoadOptions& options) {
  auto in = open_input(path);
  const auto lines = csv::read_lines(in);
  const std::string where = path.string();
  if (lines.empty()) throw Error(ErrorCode::empty_file, where + ": empty file");
  const auto header = csv::split(lines[0]);
  if (header.empty() || header[0] != "depth") {
    throw Error(ErrorCode::missing_column, where + ": first column must be 'depth'");
  }
  if (header.size() < 2) throw Error(ErrorCode::missing_column, where + ": no log channels in header");
  if (lines.size() < 2) throw Error(ErrorCode::empty_file, where + ": header without samples");

  WellLog well;
  well.id = path.stem().string();
  for (std::size_t c = 1; c < header.size(); ++c) well.channels.push_back(canonical_channel(header[c]));
  const std::size_t C = well.channels.size();
  const std::size_t T = lines.size() - 1;

  std::vector<double> depth(T);
  std::vector<std::vector<double>> cols(C, std::vector<double>(T, 0.0));
  std::vector<std::vector<bool>> gaps(C, std::vector<bool>(T, false));
  for (std::size_t r = 0; r < T; ++r) {
    const auto cells = csv::split(lines[r + 1]);
    const std::string row_where = where + ": row " + std::to_string(r + 2);
    if (cells.size() < header.size()) {
      throw Error(ErrorCode::missing_column, row_where + " has " + std::to_string(cells.size()) + " cells, expected " +
                                                 std::to_string(header.size()));
    }
    const auto d = csv::parse_double(cells[0]);
    if (!d || !std::isfinite(*d)) throw Error(ErrorCode::non_numeric_cell, row_where + ": bad depth '" + cells[0] + "'");
    depth[r] = *d;
    for (std::size_t c = 0; c < C; ++c) {
      const auto& cell = cells[c + 1];
      if (is_gap(cell)) {
        if (!options.interpolate_gaps) {
          throw Error(ErrorCode::non_numeric_cell, row_where + ": missing value in " + well.channels[c]);
        }
        gaps[c][r] = true;
        continue;
      }
      const auto v = csv::parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::non_numeric_cell, row_where + ": non-numeric value '" + cell + "' in " + well.channels[c]);
      }
      cols[c][r] = *v;
    }
  }
  for (std::size_t c = 0; c < C; ++c) fill_gaps(cols[c], gaps[c], where);

  well.depth_start = depth[0];
  if (T > 1) {
    const double step = depth[1] - depth[0];
    if (!(step > 0.0)) throw Error(ErrorCode::non_uniform_step, where + ": depth must be strictly increasing");
    for (std::size_t r = 1; r < T; ++r) {
      const double s = depth[r] - depth[r - 1];
      if (!(s > 0.0) || std::fabs(s - step) > 1e-6) {
        throw Error(ErrorCode::non_uniform_step, where + ": depth step " + format_double(s) + " at row " +
                                                     std::to_string(r + 2) + " differs from " + format_double(step));
      }
    }
    well.depth_step = step;
  }
  std::vector<double> flat;
  flat.reserve(C * T);
  for (const auto& col : cols) flat.insert(flat.end(), col.begin(), col.end());
  well.samples = Tensor({C, T}, std::move(flat));
  return well;
}

void save_well_csv(const WellLog& well, const fs::path& path) {
  auto out = open_output(path);
  out << "depth";
  for (const auto& c : well.channels) out << ',' << c;
  out << '\n';
  for (std::size_t t = 0; t < well.length(); ++t) {
    out << format_double(well.depth_at(t));
    for (std::size_t c = 0; c < well.channels.size(); ++c) out << ',' << format_double(well.samples.at(c, t));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

std::vector<MarkerPick> load_picks_csv(const fs::path& path) {
  auto in = open_input(path);
  const auto lines = csv::read_lines(in);
  const std::string where = path.string();
  if (lines.empty()) throw Error(ErrorCode::empty_file, where + ": empty file");
  const auto header = csv::split(lines[0]);
  if (header.size() < 3 || header[0] != "well_id" || header[1] != "marker" || header[2] != "depth_ft") {
    throw Error(ErrorCode::missing_column, where + ": header must be well_id,marker,depth_ft");
  }
  std::vector<MarkerPick> picks;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = csv::split(lines[r]);
    const std::string row_where = where + ": row " + std::to_string(r + 1);
    if (cells.size() < 3) throw Error(ErrorCode::missing_column, row_where + " has fewer than 3 cells");
    const auto depth = csv::parse_double(cells[2]);
    if (!depth || !std::isfinite(*depth)) {
      throw Error(ErrorCode::unparsable_depth, row_where + ": unparsable depth '" + cells[2] + "'");
    }
    if (!seen.emplace(cells[0], cells[1]).second) {
      throw Error(ErrorCode::duplicate_pick, row_where + ": duplicate pick for (" + cells[0] + ", " + cells[1] + ")");
    }
    picks.push_back(MarkerPick{cells[0], cells[1], *depth});
  }
  return picks;
}

void save_picks_csv(std::span<const MarkerPick> picks, const fs::path& path) {
  auto out = open_output(path);
  out << "well_id,marker,depth_ft\n";
  for (const auto& p : picks) out << p.well_id << ',' << p.marker << ',' << format_double(p.depth_ft) << '\n';
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

std::size_t pick_to_index(const MarkerPick& pick, const WellLog& well) {
  constexpr double kSlack = 1e-6;  // ft
  if (pick.depth_ft < well.depth_start - kSlack || pick.depth_ft > well.depth_end() + kSlack) {
    throw Error(ErrorCode::out_of_range, "pick " + pick.marker + " at " + format_double(pick.depth_ft) +
                                             " ft lies outside well " + well.id + " [" +
                                             format_double(well.depth_start) + ", " +
                                             format_double(well.depth_end()) + "]");
  }
  const double pos = (pick.depth_ft - well.depth_start) / well.depth_step;
  const auto index = static_cast<std::size_t>(std::max(0.0, std::floor(pos + 0.5)));
  return std::min(index, well.length() - 1);
}

Tensor NormStats::apply(const Tensor& samples) const {
  if (samples.rank() != 2 || samples.extent(0) != mean.size()) {
    throw Error(ErrorCode::channel_mismatch, "normalization stats cover " + std::to_string(mean.size()) +
                                                 " channels, data has shape " + to_string(samples.shape()));
  }
  Tensor out = samples;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    for (double& v : out.row(c)) v = (v - mean[c]) / stddev[c];
  }
  return out;
}

WellLog NormStats::apply(const WellLog& well) const {
  if (well.channels != channels) {
    throw Error(ErrorCode::channel_mismatch, "well " + well.id + " channels do not match normalization channels");
  }
  WellLog out = well;
  out.samples = apply(well.samples);
  return out;
}

NormStats compute_norm_stats(std::span<const WellLog> wells) {
  if (wells.empty()) throw Error(ErrorCode::empty_split, "normalization needs at least one well");
  NormStats stats;
  stats.channels = wells.front().channels;
  const std::size_t C = stats.channels.size();
  stats.mean.assign(C, 0.0);
  stats.stddev.assign(C, 0.0);
  std::vector<double> count(C, 0.0);
  for (const auto& w : wells) {
    if (w.channels != stats.channels) {
      throw Error(ErrorCode::channel_mismatch, "well " + w.id + " has a different channel set");
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (double v : w.samples.row(c)) stats.mean[c] += v;
      count[c] += static_cast<double>(w.length());
    }
  }
  for (std::size_t c = 0; c < C; ++c) stats.mean[c] /= count[c];
  for (const auto& w : wells) {
    for (std::size_t c = 0; c < C; ++c) {
      for (double v : w.samples.row(c)) stats.stddev[c] += (v - stats.mean[c]) * (v - stats.mean[c]);
    }
  }
  for (std::size_t c = 0; c < C; ++c) stats.stddev[c] = std::max(std::sqrt(stats.stddev[c] / count[c]), kStdFloor);
  return stats;
}

std::pair<std::vector<WellLog>, NormStats> normalize_wells(std::span<const WellLog> train,
                                                           std::span<const WellLog> all) {
  NormStats stats = compute_norm_stats(train);
  std::vector<WellLog> out;
  out.reserve(all.size());
  for (const auto& w : all) out.push_back(stats.apply(w));
  return {std::move(out), std::move(stats)};
}

Dataset load_dataset(const fs::path& dir, const WellLoadOptions& options) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io_failure, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    if (entry.path().filename() == "picks.csv") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Dataset data;
  for (const auto& f : files) data.wells.push_back(load_well_csv(f, options));
  const auto picks_path = dir / "picks.csv";
  if (fs::exists(picks_path)) data.picks = load_picks_csv(picks_path);
  return data;
}

void save_dataset(const Dataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create '" + dir.string() + "': " + ec.message());
  for (const auto& w : data.wells) save_well_csv(w, dir / (w.id + ".csv"));
  save_picks_csv(data.picks, dir / "picks.csv");
}

}  // namespace seqmark
