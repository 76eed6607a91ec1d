// ovsr_cli: train, eval, ablate, sweep, degrade, bench.
//
//   ovsr_cli train --model govsr-4+2-56 --alpha 0.01 --out runs/govsr
//   ovsr_cli eval --checkpoint runs/govsr/checkpoint.ovsr --out runs/govsr/eval
//   ovsr_cli eval --baseline bicubic --out runs/bicubic
//   ovsr_cli sweep --model govsr-1+1-16 --axis split --iterations 500
//
// Every command also takes --config FILE (key=value lines) and repeated
// --set key=value; explicit flags override both.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "ovsr/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> model, framework, blocks, out, checkpoint, checkpoints, baseline, axis, input, eval_dir;
  std::optional<double> alpha;
  std::optional<long long> iterations, seed, batch, threads, log_every;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override a config key (key=value); repeatable");
  cmd->add_option("--model", f.model, "model name, e.g. govsr-8+4-80, hvsr-5-64");
  cmd->add_option("--framework", f.framework, "ivsr|rvsr|hvsr|lovsr|govsr");
  cmd->add_option("--blocks", f.blocks, "P+S block split (or S for baselines)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file");
  cmd->add_option("--checkpoints", f.checkpoints, "comma-separated extra checkpoints (ablate)");
  cmd->add_option("--baseline", f.baseline, "bicubic: evaluate plain bicubic upsampling");
  cmd->add_option("--axis", f.axis, "sweep axis: alpha|split");
  cmd->add_option("--input", f.input, "input frame directory (degrade)");
  cmd->add_option("--eval-dir", f.eval_dir, "directory of HR frame sequences for evaluation");
  cmd->add_option("--alpha", f.alpha, "precursor loss weight");
  cmd->add_option("--iterations", f.iterations, "training iterations");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--batch", f.batch, "batch size");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--log-every", f.log_every, "progress print interval (train)");
}

ovsr::KeyValues collect(const CommonFlags& f, const std::string& filters) {
  ovsr::KeyValues kv;
  if (!f.config_file.empty()) kv = ovsr::read_key_values(f.config_file);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ovsr::ConfigError("--set", "expected key=value, got '" + s + "'");
    kv.emplace_back(ovsr::trim(s.substr(0, eq)), ovsr::trim(s.substr(eq + 1)));
  }
  auto put = [&](const char* key, const auto& opt) {
    if (!opt) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, std::string>) kv.emplace_back(key, *opt);
    else if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, double>) kv.emplace_back(key, ovsr::format_double(*opt));
    else kv.emplace_back(key, std::to_string(*opt));
  };
  put("model", f.model);
  put("framework", f.framework);
  put("blocks", f.blocks);
  if (!filters.empty()) kv.emplace_back("filters", filters);
  put("output_dir", f.out);
  put("checkpoint", f.checkpoint);
  put("checkpoints", f.checkpoints);
  put("baseline", f.baseline);
  put("axis", f.axis);
  put("input_dir", f.input);
  put("eval_dir", f.eval_dir);
  put("alpha", f.alpha);
  put("iterations", f.iterations);
  put("seed", f.seed);
  put("batch", f.batch);
  put("threads", f.threads);
  put("log_every", f.log_every);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Omniscient video super-resolution toolkit"};
  app.require_subcommand(1);
  const std::vector<std::string> names{"train", "eval", "ablate", "sweep", "degrade", "bench"};
  const std::vector<std::string> help{
      "train a model on synthetic clips", "evaluate a checkpoint or the bicubic baseline",
      "input-ablation grid for one or more checkpoints", "train/evaluate along the alpha or split axis",
      "blur + downsample a frame directory", "parameters, FLOPs and timing"};
  std::vector<CommonFlags> flags(names.size());
  std::vector<std::string> filters(names.size());
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto* cmd = app.add_subcommand(names[i], help[i]);
    add_common(cmd, flags[i]);
    cmd->add_option("--filters", filters[i], "feature channels");
    cmds.push_back(cmd);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      if (!cmds[i]->parsed()) continue;
      const ovsr::RunConfig run = ovsr::make_run_config(names[i], collect(flags[i], filters[i]));
      if (names[i] == "train") {
        const auto r = ovsr::cmd_train(run, &std::cerr);
        std::cout << "final eval PSNR " << ovsr::format_metric(r.final_eval_psnr, 3) << " dB (bicubic "
                  << ovsr::format_metric(r.bicubic_eval_psnr, 3) << " dB)\n";
      } else if (names[i] == "eval") {
        std::cout << ovsr::cmd_eval(run).to_table();
      } else if (names[i] == "ablate") {
        std::cout << ovsr::cmd_ablate(run).to_text();
      } else if (names[i] == "sweep") {
        const auto rows = ovsr::cmd_sweep(run, &std::cerr);
        for (const auto& r : rows) std::cout << r.setting << " " << ovsr::format_metric(r.eval_psnr, 3) << " dB\n";
      } else if (names[i] == "degrade") {
        std::cout << "wrote " << ovsr::cmd_degrade(run) << " frames to " << run.output_dir << "\n";
      } else if (names[i] == "bench") {
        std::cout << ovsr::cmd_bench(run).to_table();
      }
    }
  } catch (const ovsr::ConfigError& e) {
    std::cerr << "config error in field '" << e.field() << "': " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
