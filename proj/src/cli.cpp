#include "seqmark/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "csv.hpp"
#include "seqmark/ablation.hpp"
#include "seqmark/checkpoint.hpp"
#include "seqmark/config.hpp"
#include "seqmark/error.hpp"
#include "seqmark/evaluation.hpp"
#include "seqmark/inference.hpp"
#include "seqmark/synth.hpp"
#include "seqmark/training.hpp"

namespace seqmark {

namespace fs = std::filesystem;

namespace {

std::size_t thread_cap() {
  const char* env = std::getenv("SEQMARK_THREADS");
  if (!env || !*env) return 1;
  const auto v = csv::parse_double(env);
  if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
    throw Error(ErrorCode::config_error, "SEQMARK_THREADS must be a positive integer, got '" + std::string(env) + "'");
  }
  return static_cast<std::size_t>(*v);
}

bool parse_on_off(const std::string& text) {
  if (text == "on") return true;
  if (text == "off") return false;
  throw Error(ErrorCode::config_error, "expected on|off, got '" + text + "'");
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p.replace_extension();
  p += suffix;
  return p;
}

void ensure_parent(const fs::path& path) {
  if (!path.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create '" + path.parent_path().string() + "': " + ec.message());
}

RunConfig resolve_config(const std::string& config_file, const std::vector<std::string>& overrides) {
  RunConfig rc;
  if (!config_file.empty()) rc = load_run_config(config_file, rc);
  apply_overrides(rc, overrides);
  return rc;
}

std::vector<WellLog> load_wells(const fs::path& path) {
  if (fs::is_directory(path)) return load_dataset(path).wells;
  if (!fs::exists(path)) throw Error(ErrorCode::io_failure, "'" + path.string() + "' does not exist");
  return {load_well_csv(path)};
}

void save_split_csv(const Dataset& data, const DatasetSplit& split, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "well_id,subset\n";
  for (auto i : split.train) out << data.wells[i].id << ",train\n";
  for (auto i : split.val) out << data.wells[i].id << ",val\n";
  for (auto i : split.test) out << data.wells[i].id << ",test\n";
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

std::map<std::string, std::string> load_split_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open split file '" + path.string() + "'");
  const auto lines = csv::read_lines(in);
  if (lines.empty() || csv::split(lines[0]) != std::vector<std::string>{"well_id", "subset"}) {
    throw Error(ErrorCode::missing_column, path.string() + ": header must be well_id,subset");
  }
  std::map<std::string, std::string> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = csv::split(lines[r]);
    if (cells.size() != 2) throw Error(ErrorCode::missing_column, path.string() + ": row " + std::to_string(r + 1));
    out[cells[0]] = cells[1];
  }
  return out;
}

std::vector<double> parse_tolerances(const std::string& text) {
  RunConfig rc;
  rc.set("tolerances", text);
  return rc.tolerances;
}

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k;
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Marker detection in well logs with a soft-attention global/local 1D CNN", "seqmark"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  // synth
  SynthConfig synth;
  std::string synth_out, synth_channels = "gr", synth_markers = format_marker_specs(synth.markers);
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  cmd_synth->add_option("--out", synth_out, "Output directory")->required();
  cmd_synth->add_option("--wells", synth.n_wells, "Number of wells");
  cmd_synth->add_option("--seed", synth.seed, "Generator seed");
  cmd_synth->add_option("--channels", synth_channels, "Comma list of gr, res, den");
  cmd_synth->add_option("--markers", synth_markers, "Comma list of NAME:strong|subtle, shallowest first");
  cmd_synth->add_option("--min-length", synth.min_length, "Shortest well, samples");
  cmd_synth->add_option("--max-length", synth.max_length, "Longest well, samples");
  cmd_synth->add_option("--layers", synth.layers, "Layers in the stratigraphic column");
  cmd_synth->add_option("--noise", synth.noise_std, "GR white-noise standard deviation");
  cmd_synth->add_option("--trend", synth.trend_amplitude, "Structural relief across the field, ft");

  // shared config plumbing
  std::string config_file;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "Flat key = value config file");
    cmd->add_option("--set", overrides, "Override one config key (key=value); repeatable. Keys: " +
                                            join_keys(run_config_keys()));
  };

  // train
  std::string train_data, train_marker, train_out, train_history, train_mode, train_smoothing;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::size_t> train_epochs;
  bool train_quiet = false;
  auto* cmd_train = app.add_subcommand("train", "Train one marker model");
  cmd_train->add_option("--data", train_data, "Dataset directory (well CSVs + picks.csv)")->required();
  cmd_train->add_option("--marker", train_marker, "Marker name")->required();
  cmd_train->add_option("--out", train_out, "Checkpoint path (.smck)")->required();
  add_config(cmd_train);
  cmd_train->add_option("--mode", train_mode, "combined|global|local (default: config 'mode', combined)");
  cmd_train->add_option("--smoothing", train_smoothing, "on|off (default: config 'smoothing', on)");
  cmd_train->add_option("--seed", train_seed, "Seed for split, init, shuffling and dropout (default: config, 42)");
  cmd_train->add_option("--epochs", train_epochs, "Maximum epochs (default: config 'max_epochs', 200)");
  cmd_train->add_option("--history", train_history, "History CSV (default: <out>.history.csv)");
  cmd_train->add_flag("--quiet", train_quiet, "Do not print per-epoch losses");

  // predict
  std::string pred_model, pred_wells, pred_out, pred_curves, pred_split, pred_subset;
  std::optional<std::size_t> pred_passes;
  std::optional<double> pred_prob, pred_unc;
  std::optional<std::uint64_t> pred_seed;
  auto* cmd_predict = app.add_subcommand("predict", "Detect a marker with MC-dropout uncertainty");
  cmd_predict->add_option("--model", pred_model, "Checkpoint (.smck)")->required();
  cmd_predict->add_option("--wells", pred_wells, "Well CSV or directory of well CSVs")->required();
  cmd_predict->add_option("--out", pred_out, "Predictions CSV")->required();
  cmd_predict->add_option("--curves", pred_curves, "Optional per-depth probability/attention CSV");
  add_config(cmd_predict);
  cmd_predict->add_option("--mc-passes", pred_passes, "MC-dropout passes (default: config 'mc_passes', 30)");
  cmd_predict->add_option("--prob-threshold", pred_prob, "Valid if probability > this (default 0.5)");
  cmd_predict->add_option("--uncertainty-threshold", pred_unc, "Valid if uncertainty < this, ft (default 5)");
  cmd_predict->add_option("--seed", pred_seed, "MC-dropout master seed (default 42)");
  cmd_predict->add_option("--split", pred_split, "Split CSV written by train");
  cmd_predict->add_option("--subset", pred_subset, "Only wells of this subset in --split (train|val|test)");

  // eval
  std::string eval_pred, eval_truth, eval_out, eval_hist, eval_tol = "1,2,5,10";
  auto* cmd_eval = app.add_subcommand("eval", "Precision/recall/F1 at depth tolerances");
  cmd_eval->add_option("--pred", eval_pred, "Predictions CSV")->required();
  cmd_eval->add_option("--truth", eval_truth, "Picks CSV (well_id,marker,depth_ft)")->required();
  cmd_eval->add_option("--out", eval_out, "Report CSV")->required();
  cmd_eval->add_option("--tolerances", eval_tol, "Depth tolerances, ft");
  cmd_eval->add_option("--histogram", eval_hist, "Error histogram CSV (default: <out>.histogram.csv)");

  // ablate
  std::string abl_data, abl_markers, abl_seeds = "1,2,3", abl_out, abl_summary;
  auto* cmd_ablate = app.add_subcommand("ablate", "Global/local/combined x smoothing on/off ablation");
  cmd_ablate->add_option("--data", abl_data, "Dataset directory")->required();
  cmd_ablate->add_option("--markers", abl_markers, "Comma list of marker names")->required();
  cmd_ablate->add_option("--seeds", abl_seeds, "Comma list of seeds");
  cmd_ablate->add_option("--out", abl_out, "Per-cell CSV (mode,smoothing,seed,F1)")->required();
  cmd_ablate->add_option("--summary", abl_summary, "Mean-per-cell CSV (default: <out>.summary.csv)");
  add_config(cmd_ablate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // subcommand --help arrives here with the subcommand's own text
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cmd_synth->parsed()) {
      synth.channels.clear();
      for (const auto& c : csv::split(synth_channels)) synth.channels.push_back(canonical_channel(c));
      synth.markers = parse_marker_specs(synth_markers);
      synth.validate();
      const Dataset data = synthesize_wells(synth);
      save_dataset(data, synth_out);
      std::ofstream manifest(fs::path(synth_out) / "manifest.txt");
      if (!manifest) throw Error(ErrorCode::io_failure, "cannot write manifest in '" + synth_out + "'");
      manifest << "wells = " << synth.n_wells << "\nseed = " << synth.seed << "\nchannels = ";
      for (std::size_t i = 0; i < synth.channels.size(); ++i) manifest << (i ? "," : "") << synth.channels[i];
      manifest << "\nmarkers = " << format_marker_specs(synth.markers) << "\nmin_length = " << synth.min_length
               << "\nmax_length = " << synth.max_length << "\nlayers = " << synth.layers
               << "\nnoise = " << format_double(synth.noise_std) << "\ntrend = " << format_double(synth.trend_amplitude)
               << "\ndepth_step = " << format_double(synth.depth_step) << "\n";
      out << "wrote " << data.wells.size() << " wells and " << data.picks.size() << " picks to " << synth_out << "\n";
      return 0;
    }

    if (cmd_train->parsed()) {
      RunConfig rc = resolve_config(config_file, overrides);
      if (!train_mode.empty()) rc.net.head_input = parse_head_input(train_mode);
      if (!train_smoothing.empty()) rc.train.smoothing = parse_on_off(train_smoothing);
      if (train_seed) rc.train.seed = rc.inference.seed = *train_seed;
      if (train_epochs) rc.train.max_epochs = *train_epochs;
      const Dataset data = load_dataset(train_data);
      if (data.wells.empty()) throw Error(ErrorCode::io_failure, "no well CSVs in '" + train_data + "'");
      rc.net.input_channels = data.wells.front().channels.size();
      rc.validate();
      const TrainedModel model = train_marker_model(data, train_marker, rc.net, rc.train, [&](const EpochReport& r) {
        if (!train_quiet) {
          out << "epoch " << r.epoch << " train_loss " << format_double(r.train_loss) << " val_loss "
              << format_double(r.val_loss) << (r.improved ? " *" : "") << "\n";
        }
      });
      const fs::path ckpt = train_out;
      ensure_parent(ckpt);
      save_checkpoint(model.net, model.norm, ckpt);
      save_history_csv(model.history, train_history.empty() ? sibling(ckpt, ".history.csv") : fs::path(train_history));
      save_split_csv(data, model.split, sibling(ckpt, ".split.csv"));
      out << "best epoch " << model.history.best_epoch << " of " << model.history.stopped_epoch;
      if (model.skipped_wells > 0) out << " (" << model.skipped_wells << " wells without a " << train_marker << " pick)";
      out << "\nwrote " << ckpt.string() << "\n";
      return 0;
    }

    if (cmd_predict->parsed()) {
      RunConfig rc = resolve_config(config_file, overrides);
      if (pred_passes) rc.inference.mc_passes = *pred_passes;
      if (pred_prob) rc.inference.prob_threshold = *pred_prob;
      if (pred_unc) rc.inference.uncertainty_threshold_ft = *pred_unc;
      if (pred_seed) rc.inference.seed = *pred_seed;
      if (rc.inference.mc_passes < 1) throw Error(ErrorCode::config_error, "--mc-passes must be at least 1");
      const Checkpoint ck = load_checkpoint(pred_model);
      std::vector<WellLog> wells = load_wells(pred_wells);
      if (!pred_subset.empty()) {
        if (pred_split.empty()) throw Error(ErrorCode::config_error, "--subset needs --split");
        const auto subsets = load_split_csv(pred_split);
        std::erase_if(wells, [&](const WellLog& w) {
          const auto it = subsets.find(w.id);
          return it == subsets.end() || it->second != pred_subset;
        });
      }
      const auto detections = predict_wells(ck.net, ck.norm, wells, rc.inference);
      ensure_parent(pred_out);
      save_detections_csv(detections, pred_out);
      if (!pred_curves.empty()) {
        ensure_parent(pred_curves);
        save_curves_csv(prediction_curves(ck.net, ck.norm, wells), pred_curves);
      }
      std::size_t valid = 0;
      for (const auto& d : detections) valid += d.valid ? 1 : 0;
      out << valid << " of " << detections.size() << " detections valid; wrote " << pred_out << "\n";
      return 0;
    }

    if (cmd_eval->parsed()) {
      const auto detections = load_detections_csv(eval_pred);
      const auto picks = load_picks_csv(eval_truth);
      const auto tolerances = parse_tolerances(eval_tol);
      const EvalReport report = evaluate_dataset(detections, picks, tolerances);
      ensure_parent(eval_out);
      save_report_csv(report, eval_out);
      save_histogram_csv(report.histogram, eval_hist.empty() ? sibling(eval_out, ".histogram.csv") : fs::path(eval_hist));
      out << "F1@2ft " << format_double(report.f1_2ft) << "\n";
      return 0;
    }

    if (cmd_ablate->parsed()) {
      RunConfig rc = resolve_config(config_file, overrides);
      const Dataset data = load_dataset(abl_data);
      if (data.wells.empty()) throw Error(ErrorCode::io_failure, "no well CSVs in '" + abl_data + "'");
      rc.net.input_channels = data.wells.front().channels.size();
      const auto markers = csv::split(abl_markers);
      std::vector<std::uint64_t> seeds;
      for (const auto& s : csv::split(abl_seeds)) {
        RunConfig tmp;
        tmp.set("seed", s);
        seeds.push_back(tmp.train.seed);
      }
      const auto cells = run_ablation(data, markers, seeds, rc, thread_cap(), [&](const AblationCell& c) {
        out << to_string(c.mode) << " smoothing=" << (c.smoothing ? "on" : "off") << " seed=" << c.seed << " F1 "
            << (c.f1 ? format_double(*c.f1) : "NA") << "\n";
        if (!c.f1) err << "error: cell failed: " << c.error << "\n";
      });
      ensure_parent(abl_out);
      save_ablation_csv(cells, abl_out);
      const auto summary = summarize_ablation(cells);
      save_ablation_summary_csv(summary, abl_summary.empty() ? sibling(abl_out, ".summary.csv") : fs::path(abl_summary));
      for (const auto& r : summary) {
        out << "mean " << to_string(r.mode) << " smoothing=" << (r.smoothing ? "on" : "off") << " F1 "
            << (r.mean_f1 ? format_double(*r.mean_f1) : "NA") << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace seqmark
