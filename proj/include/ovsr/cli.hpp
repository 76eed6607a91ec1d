#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ovsr/config.hpp"
#include "ovsr/data.hpp"
#include "ovsr/metrics.hpp"
#include "ovsr/model.hpp"
#include "ovsr/scheduler.hpp"
#include "ovsr/trainer.hpp"

namespace ovsr {

struct RunConfig {
  std::string command;
  ModelConfig model;
  bool model_given = false;  // some model key was set explicitly
  TrainConfig train;
  LossConfig loss;
  std::string output_dir = "out";
  std::string checkpoint;
  std::vector<std::string> checkpoints;  // ablate: one grid column group each
  std::string input_dir;
  std::string eval_dir;  // sub-directories of HR frames; empty: synthetic eval set
  std::string baseline;  // "" or "bicubic"
  std::string axis;      // sweep: alpha | split
  int flops_height = 720;
  int flops_width = 1280;
  int bench_frames = 5;
  int bench_reps = 0;  // 0: no timing in eval reports
  std::int64_t log_every = 0;
};

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void apply_run_key(RunConfig& run, const std::string& key, const std::string& value) {
  if (apply_model_key(run.model, key, value)) {
    run.model_given = true;
    return;
  }
  if (apply_train_key(run.train, run.loss, key, value)) return;
  if (key == "command") run.command = value;
  else if (key == "output_dir") run.output_dir = value;
  else if (key == "checkpoint") run.checkpoint = value;
  else if (key == "checkpoints") run.checkpoints = split_list(value);
  else if (key == "input_dir") run.input_dir = value;
  else if (key == "eval_dir") run.eval_dir = value;
  else if (key == "baseline") {
    if (!value.empty() && value != "bicubic") throw ConfigError(key, "only 'bicubic' is supported, got '" + value + "'");
    run.baseline = value;
  } else if (key == "axis") run.axis = value;
  else if (key == "flops_height") run.flops_height = parse_int_field(key, value);
  else if (key == "flops_width") run.flops_width = parse_int_field(key, value);
  else if (key == "bench_frames") run.bench_frames = parse_int_field(key, value);
  else if (key == "bench_reps") run.bench_reps = parse_int_field(key, value);
  else if (key == "log_every") run.log_every = parse_int64_field(key, value);
  else throw ConfigError(key, "unknown configuration key");
}

inline RunConfig make_run_config(const std::string& command, const KeyValues& kv) {
  RunConfig run;
  run.command = command;
  for (const auto& [k, v] : kv) apply_run_key(run, k, v);
  run.command = command;
  return run;
}

// Every field, in a fixed order; reading this back yields the same RunConfig.
inline KeyValues resolved_key_values(const RunConfig& run) {
  KeyValues kv{{"command", run.command}};
  for (const auto& [k, v] : to_key_values(run.model)) kv.emplace_back(k, v);
  for (const auto& [k, v] : to_key_values(run.train, run.loss)) kv.emplace_back(k, v);
  std::string ckpts;
  for (const auto& c : run.checkpoints) ckpts += (ckpts.empty() ? "" : ",") + c;
  const KeyValues rest{
      {"output_dir", run.output_dir},   {"checkpoint", run.checkpoint},
      {"checkpoints", ckpts},           {"input_dir", run.input_dir},
      {"eval_dir", run.eval_dir},       {"baseline", run.baseline},
      {"axis", run.axis},               {"flops_height", std::to_string(run.flops_height)},
      {"flops_width", std::to_string(run.flops_width)}, {"bench_frames", std::to_string(run.bench_frames)},
      {"bench_reps", std::to_string(run.bench_reps)},   {"log_every", std::to_string(run.log_every)},
  };
  kv.insert(kv.end(), rest.begin(), rest.end());
  return kv;
}

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& run) {
  if (run.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  std::filesystem::create_directories(run.output_dir);
  return run.output_dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string());
  os << text;
  if (!os) throw FormatError("failed writing " + path.string());
}

inline void echo_config(const RunConfig& run, const std::filesystem::path& dir) {
  write_text(dir / "resolved_config.txt", format_key_values(resolved_key_values(run)));
}

inline void require_file(const std::string& field, const std::string& path) {
  if (path.empty()) throw ConfigError(field, "required");
  if (!std::filesystem::exists(path)) throw ConfigError(field, "no such file: " + path);
}

struct NamedSequence {
  std::string name;
  VideoSequence seq;
};

// Synthetic held-out clips, or every sub-directory of eval_dir as one HR sequence.
inline std::vector<NamedSequence> eval_sequences(const RunConfig& run) {
  std::vector<NamedSequence> out;
  if (run.eval_dir.empty()) {
    auto set = make_eval_set(run.train);
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back({"clip" + std::to_string(i), std::move(set[i])});
    return out;
  }
  namespace fs = std::filesystem;
  if (!fs::is_directory(run.eval_dir)) throw ConfigError("eval_dir", "not a directory: " + run.eval_dir);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(run.eval_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ConfigError("eval_dir", "no sequence directories in " + run.eval_dir);
  for (const auto& d : dirs) {
    out.push_back({d.filename().string(),
                   make_sequence(read_frame_dir(d.string()), run.train.degrade, PaddingMode::kReplicate)});
  }
  return out;
}

inline EvalRow score(const std::string& name, const std::vector<Tensor>& sr, const VideoSequence& seq,
                     int first_output, const EvalProtocol& protocol) {
  const std::vector<Tensor> hr(seq.hr.begin() + first_output,
                               seq.hr.begin() + first_output + static_cast<std::ptrdiff_t>(sr.size()));
  const SequenceScore s = score_sequence(clamp_frames(sr), hr, protocol);
  return {name, s.psnr, s.ssim};
}

inline EvalReport evaluate_report(const Model* model, const std::vector<NamedSequence>& data, const RunConfig& run) {
  EvalReport report;
  NoGradScope no_grad;
  ThreadCountScope threads(run.train.threads);
  for (const auto& [name, seq] : data) {
    if (model == nullptr) {
      std::vector<Tensor> sr;
      for (const auto& f : seq.lr) sr.push_back(bicubic_upsample(f, seq.scale));
      report.rows.push_back(score(name, sr, seq, 0, run.train.protocol));
    } else {
      const RunResult r = run_model(*model, seq);
      report.rows.push_back(score(name, r.sr, seq, r.first_output, run.train.protocol));
    }
  }
  report.flops_h = run.flops_height;
  report.flops_w = run.flops_width;
  if (model == nullptr) {
    report.model = "bicubic";
    return report;
  }
  report.model = model->config.name();
  report.parameters = count_parameters(model->config).total();
  report.flops = count_flops(model->config, run.flops_height, run.flops_width);
  if (run.bench_reps > 0) {
    const auto b = benchmark_time(*model, run.flops_height / model->config.scale,
                                  run.flops_width / model->config.scale, run.bench_frames, run.bench_reps);
    report.ms_per_frame = b.ms_per_frame;
    report.fps = b.fps;
  }
  return report;
}

inline void write_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem) {
  write_text(dir / (stem + ".csv"), report.to_csv());
  write_text(dir / (stem + ".txt"), report.to_table());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each writes resolved_config.txt into the output directory.

inline TrainResult cmd_train(const RunConfig& run, std::ostream* progress = nullptr) {
  run.model.validate();
  run.train.validate();
  run.loss.validate();
  const auto dir = detail::prepare_output(run);
  detail::echo_config(run, dir);
  TrainCallback cb;
  if (progress != nullptr && run.log_every > 0) {
    cb = [&](const TrainLogRow& row) {
      if (row.iteration % run.log_every == 0 || !std::isnan(row.eval_psnr)) {
        *progress << "iter " << row.iteration << " lr " << row.lr << " loss " << row.loss;
        if (!std::isnan(row.eval_psnr)) *progress << " eval_psnr " << row.eval_psnr;
        *progress << "\n";
      }
    };
  }
  TrainResult result = train(run.model, run.train, run.loss, cb);
  detail::write_text(dir / "loss.csv", loss_csv(result.log));
  save_checkpoint((dir / "checkpoint.ovsr").string(), result.model);
  EvalReport report;
  report.model = result.model.config.name();
  report.rows = result.final_eval;
  report.parameters = count_parameters(result.model.config).total();
  report.flops = count_flops(result.model.config, run.flops_height, run.flops_width);
  report.flops_h = run.flops_height;
  report.flops_w = run.flops_width;
  detail::write_report(report, dir, "eval");
  return result;
}

inline EvalReport cmd_eval(const RunConfig& run) {
  const auto dir = detail::prepare_output(run);
  const auto data = detail::eval_sequences(run);
  if (run.baseline == "bicubic") {
    detail::echo_config(run, dir);
    EvalReport report = detail::evaluate_report(nullptr, data, run);
    detail::write_report(report, dir, "eval_report");
    return report;
  }
  detail::require_file("checkpoint", run.checkpoint);
  Model model = load_checkpoint(run.checkpoint);
  if (run.model_given && model.config.name() != run.model.name()) {
    throw ConfigError("model", "checkpoint holds " + model.config.name() + " but " + run.model.name() +
                                   " was requested");
  }
  RunConfig resolved = run;
  resolved.model = model.config;
  detail::echo_config(resolved, dir);
  EvalReport report = detail::evaluate_report(&model, data, run);
  detail::write_report(report, dir, "eval_report");
  return report;
}

// Table of ablated PSNR values; cells are "-" where the input does not exist.
struct AblationGrid {
  std::vector<std::string> column_models;    // per column
  std::vector<std::string> column_networks;  // per column: G, Net_p, Net_s, Both
  std::vector<std::string> row_labels;       // "Full", "w/o I_{t-1}", ...
  std::vector<std::vector<std::string>> cells;

  std::string to_text() const {
    std::vector<std::size_t> width(column_models.size() + 1, 0);
    width[0] = std::string("Network").size();
    for (const auto& r : row_labels) width[0] = std::max(width[0], r.size());
    for (std::size_t c = 0; c < column_models.size(); ++c) {
      width[c + 1] = std::max(column_models[c].size(), column_networks[c].size());
      for (const auto& row : cells) width[c + 1] = std::max(width[c + 1], row[c].size());
    }
    std::ostringstream os;
    auto line = [&](const std::string& head, auto get) {
      os << head << std::string(width[0] - head.size(), ' ');
      for (std::size_t c = 0; c < column_models.size(); ++c) {
        const std::string v = get(c);
        os << "  " << std::string(width[c + 1] - v.size(), ' ') << v;
      }
      os << "\n";
    };
    line("Model", [&](std::size_t c) { return column_models[c]; });
    line("Network", [&](std::size_t c) { return column_networks[c]; });
    for (std::size_t r = 0; r < row_labels.size(); ++r) line(row_labels[r], [&](std::size_t c) { return cells[r][c]; });
    return os.str();
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "row";
    for (std::size_t c = 0; c < column_models.size(); ++c) os << "," << column_models[c] << ":" << column_networks[c];
    os << "\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
      os << row_labels[r];
      for (const auto& v : cells[r]) os << "," << v;
      os << "\n";
    }
    return os.str();
  }
};

inline double ablated_psnr(const Model& model, const std::vector<detail::NamedSequence>& data, const InputMask& mask,
                           const EvalProtocol& protocol) {
  NoGradScope no_grad;
  double total = 0;
  for (const auto& [name, seq] : data) {
    const RunResult r = ablate_input(model, seq, mask);
    total += detail::score(name, r.sr, seq, r.first_output, protocol).psnr;
  }
  return total / static_cast<double>(data.size());
}

inline AblationGrid ablation_grid(std::vector<Model>& models, const std::vector<detail::NamedSequence>& data,
                                  const EvalProtocol& protocol) {
  using enum InputName;
  const std::vector<InputName> inputs{kPrevFrame, kCurFrame, kNextFrame, kPrevHidden, kCurHidden, kNextHidden};
  AblationGrid grid;
  grid.row_labels.push_back("Full");
  for (InputName in : inputs) grid.row_labels.push_back("w/o " + to_string(in));
  grid.cells.resize(grid.row_labels.size());
  for (const Model& model : models) {
    const bool omni = is_omniscient(model.config.framework);
    const std::vector<MaskTarget> targets =
        omni ? std::vector{MaskTarget::kPrecursor, MaskTarget::kSuccessor, MaskTarget::kBoth}
             : std::vector{MaskTarget::kGenerator};
    const double full = ablated_psnr(model, data, {}, protocol);
    for (MaskTarget target : targets) {
      grid.column_models.push_back(model.config.name());
      grid.column_networks.push_back(to_string(target));
      grid.cells[0].push_back(format_metric(full, 2));
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::string cell;
        try {
          const double v = ablated_psnr(model, data, {{target, inputs[i]}}, protocol);
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.2f (%+.2f)", v, v - full);
          cell = buf;
        } catch (const NotAnInputError&) {
          cell = "-";
        }
        grid.cells[i + 1].push_back(cell);
      }
    }
  }
  return grid;
}

inline AblationGrid cmd_ablate(const RunConfig& run) {
  std::vector<std::string> paths = run.checkpoints;
  if (!run.checkpoint.empty()) paths.insert(paths.begin(), run.checkpoint);
  if (paths.empty()) throw ConfigError("checkpoint", "ablate needs at least one checkpoint");
  std::vector<Model> models;
  for (const auto& p : paths) {
    detail::require_file("checkpoint", p);
    models.push_back(load_checkpoint(p));
  }
  const auto dir = detail::prepare_output(run);
  detail::echo_config(run, dir);
  ThreadCountScope threads(run.train.threads);
  const AblationGrid grid = ablation_grid(models, detail::eval_sequences(run), run.train.protocol);
  detail::write_text(dir / "ablation.csv", grid.to_csv());
  detail::write_text(dir / "ablation.txt", grid.to_text());
  return grid;
}

struct SweepRow {
  std::string setting;
  ModelConfig model;
  LossConfig loss;
  double eval_psnr = 0;
  double bicubic_psnr = 0;
};

struct SweepSetting {
  std::string label;
  ModelConfig model;
  LossConfig loss;
};

// alpha: {+Bicubic refinement, 0, 0.01, 0.1, 1}. split: P+S over a fixed block total.
inline std::vector<SweepSetting> sweep_settings(const RunConfig& run) {
  std::vector<SweepSetting> out;
  if (run.axis == "alpha") {
    if (!is_omniscient(run.model.framework)) throw ConfigError("axis", "the alpha sweep needs lovsr or govsr");
    SweepSetting bic{"+Bicubic", run.model, run.loss};
    bic.model.refine = RefineMode::kBicubic;
    bic.loss.alpha = 0;
    out.push_back(bic);
    for (double a : {0.0, 0.01, 0.1, 1.0}) {
      SweepSetting s{"alpha=" + format_metric(a, 2), run.model, run.loss};
      s.model.refine = RefineMode::kPrecursor;
      s.loss.alpha = a;
      out.push_back(s);
    }
  } else if (run.axis == "split") {
    if (!is_omniscient(run.model.framework)) throw ConfigError("axis", "the split sweep needs lovsr or govsr");
    const int total = run.model.blocks_precursor + run.model.blocks_successor;
    for (int p = 0; p <= total; ++p) {
      SweepSetting s{std::to_string(p) + "+" + std::to_string(total - p), run.model, run.loss};
      s.model.blocks_precursor = p;
      s.model.blocks_successor = total - p;
      out.push_back(s);
    }
  } else {
    throw ConfigError("axis", "expected alpha or split, got '" + run.axis + "'");
  }
  if (out.empty()) throw ConfigError("axis", "empty sweep");
  return out;
}

// Trains and evaluates every setting with the same seed; rows ranked by PSNR.
inline std::vector<SweepRow> cmd_sweep(const RunConfig& run, std::ostream* progress = nullptr) {
  const auto settings = sweep_settings(run);
  const auto dir = detail::prepare_output(run);
  detail::echo_config(run, dir);
  std::vector<SweepRow> rows;
  for (const auto& s : settings) {
    if (progress != nullptr) *progress << "sweep " << run.axis << " " << s.label << "\n";
    const TrainResult r = train(s.model, run.train, s.loss);
    rows.push_back({s.label, s.model, s.loss, r.final_eval_psnr, r.bicubic_eval_psnr});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.eval_psnr > b.eval_psnr; });
  std::ostringstream csv;
  std::ostringstream txt;
  csv << "rank,setting,model,alpha,eval_psnr,bicubic_psnr\n";
  txt << "rank  setting        model                  alpha    PSNR (dB)\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv << i + 1 << "," << r.setting << "," << r.model.name() << "," << format_double(r.loss.alpha) << ","
        << format_double(r.eval_psnr) << "," << format_double(r.bicubic_psnr) << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%4zu  %-13s  %-21s  %-7s  %s\n", i + 1, r.setting.c_str(), r.model.name().c_str(),
                  format_metric(r.loss.alpha, 2).c_str(), format_metric(r.eval_psnr, 2).c_str());
    txt << line;
  }
  detail::write_text(dir / "sweep.csv", csv.str());
  detail::write_text(dir / "sweep.txt", txt.str());
  return rows;
}

// Degrades every .ppm frame of input_dir into output_dir.
inline std::size_t cmd_degrade(const RunConfig& run) {
  if (run.input_dir.empty()) throw ConfigError("input_dir", "required");
  if (!std::filesystem::is_directory(run.input_dir)) throw ConfigError("input_dir", "not a directory: " + run.input_dir);
  const auto frames = read_frame_dir(run.input_dir);
  const auto lr = degrade(frames, run.train.degrade);
  const auto dir = detail::prepare_output(run);
  detail::echo_config(run, dir);
  write_frame_dir(dir.string(), lr);
  return lr.size();
}

// Parameters, FLOPs, and timing of a checkpoint or a freshly initialized config.
inline EvalReport cmd_bench(const RunConfig& run) {
  const auto dir = detail::prepare_output(run);
  Model model = run.checkpoint.empty() ? init_model(run.model, run.train.seed) : load_checkpoint(run.checkpoint);
  RunConfig resolved = run;
  resolved.model = model.config;
  detail::echo_config(resolved, dir);
  EvalReport report;
  report.model = model.config.name();
  report.parameters = count_parameters(model.config).total();
  report.flops = count_flops(model.config, run.flops_height, run.flops_width);
  report.flops_h = run.flops_height;
  report.flops_w = run.flops_width;
  const auto b = benchmark_time(model, run.flops_height / model.config.scale, run.flops_width / model.config.scale,
                                run.bench_frames, std::max(1, run.bench_reps), 1, run.train.threads);
  report.ms_per_frame = b.ms_per_frame;
  report.fps = b.fps;
  detail::write_report(report, dir, "bench");
  return report;
}

}  // namespace ovsr
