#include "seqmark/ablation.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "seqmark/error.hpp"

namespace seqmark {

AblationCell run_cell(const Dataset& data, std::span<const std::string> markers, const RunConfig& base,
                      HeadInput mode, bool smoothing, std::uint64_t seed) {
  AblationCell cell;
  cell.mode = mode;
  cell.smoothing = smoothing;
  cell.seed = seed;
  try {
    RunConfig rc = base;
    rc.net.head_input = mode;
    rc.train.smoothing = smoothing;
    rc.train.seed = seed;
    rc.inference.seed = seed;
    rc.validate();
    for (const auto& marker : markers) {
      const TrainedModel model = train_marker_model(data, marker, rc.net, rc.train);
      std::vector<WellLog> test;
      for (auto i : model.split.test) {
        if (data.find_pick(data.wells[i].id, marker)) test.push_back(data.wells[i]);
      }
      const auto found = predict_wells(model.net, model.norm, test, rc.inference);
      cell.detections.insert(cell.detections.end(), found.begin(), found.end());
    }
    cell.report = evaluate_dataset(cell.detections, data.picks, rc.tolerances);
    cell.f1 = cell.report.f1_2ft;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

std::vector<AblationCell> run_ablation(const Dataset& data, std::span<const std::string> markers,
                                       std::span<const std::uint64_t> seeds, const RunConfig& base,
                                       std::size_t threads, const std::function<void(const AblationCell&)>& on_cell) {
  struct Job {
    HeadInput mode;
    bool smoothing;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (HeadInput mode : {HeadInput::global_only, HeadInput::local_only, HeadInput::combined}) {
    for (bool smoothing : {true, false}) {
      for (auto seed : seeds) jobs.push_back({mode, smoothing, seed});
    }
  }
  std::vector<AblationCell> cells(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      cells[i] = run_cell(data, markers, base, jobs[i].mode, jobs[i].smoothing, jobs[i].seed);
      if (on_cell) {
        std::lock_guard lock(report_mutex);
        on_cell(cells[i]);
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, jobs.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return cells;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string f1_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

void save_ablation_csv(std::span<const AblationCell> cells, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "mode,smoothing,seed,F1\n";
  for (const auto& c : cells) {
    out << to_string(c.mode) << ',' << (c.smoothing ? "on" : "off") << ',' << c.seed << ',' << f1_cell(c.f1) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

std::vector<AblationSummaryRow> summarize_ablation(std::span<const AblationCell> cells) {
  std::vector<AblationSummaryRow> rows;
  for (HeadInput mode : {HeadInput::global_only, HeadInput::local_only, HeadInput::combined}) {
    for (bool smoothing : {true, false}) {
      AblationSummaryRow row{mode, smoothing, std::nullopt, 0, 0};
      double sum = 0.0;
      std::size_t ok = 0;
      for (const auto& c : cells) {
        if (c.mode != mode || c.smoothing != smoothing) continue;
        ++row.cells;
        if (c.f1) {
          sum += *c.f1;
          ++ok;
        } else {
          ++row.failed;
        }
      }
      if (ok > 0) row.mean_f1 = sum / static_cast<double>(ok);
      rows.push_back(row);
    }
  }
  return rows;
}

void save_ablation_summary_csv(std::span<const AblationSummaryRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "mode,smoothing,mean_F1,cells,failed\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << (r.smoothing ? "on" : "off") << ',' << f1_cell(r.mean_f1) << ',' << r.cells
        << ',' << r.failed << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace seqmark
