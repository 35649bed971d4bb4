#include "modalcur_cli/commands.hpp"

#include <modalcur/baselines.hpp>
#include <modalcur/checkpoint.hpp>
#include <modalcur/plate_fe.hpp>
#include <modalcur/svg.hpp>
#include <modalcur/trainer.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace modalcur::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string join_cells(const SensorConfig& c) {
  std::string out;
  for (std::size_t i = 0; i < c.cells.size(); ++i) out += (i ? " " : "") + std::to_string(c.cells[i]);
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::shared_ptr<const EnvSuite> make_suite(std::shared_ptr<const ModalModel> model, const RunConfig& config) {
  if (config.n_modes > model->n_modes()) throw std::invalid_argument("model.n_modes exceeds modes available in the model");
  return std::make_shared<const EnvSuite>(std::move(model), config.n_sensors, config.n_modes);
}

EvalOptions eval_options(const RunConfig& config) {
  EvalOptions o;
  o.n_episodes = config.eval.episodes;
  o.greedy = config.eval.greedy;
  o.randomize_init = config.eval.randomize_init;
  o.seed = mix_seed(config.seed, 0xe7a1);
  o.episode_length = config.episode_length;
  o.exhaustive_budget = config.eval.exhaustive_budget;
  return o;
}

std::vector<std::string> split_labels(const std::vector<ManifestRow>& manifest, const std::vector<EnvLevel>& levels) {
  std::vector<std::string> out;
  for (const auto& l : levels)
    out.push_back(manifest[static_cast<std::size_t>(l.level_index)].train ? "train" : "holdout");
  return out;
}

}  // namespace

LevelSelector selector_from_string(const std::string& s) {
  if (s == "train") return LevelSelector::train;
  if (s == "holdout") return LevelSelector::holdout;
  if (s == "all") return LevelSelector::all;
  throw std::invalid_argument("--levels must be one of train, holdout, all");
}

std::string to_string(LevelSelector s) {
  switch (s) {
    case LevelSelector::train: return "train";
    case LevelSelector::holdout: return "holdout";
    case LevelSelector::all: return "all";
  }
  return "unknown";
}

std::string level_label(const ModeRange& theta) { return "FSEWM-" + theta.label(); }

std::shared_ptr<const ModalModel> obtain_model(const RunConfig& config) {
  config.validate();
  switch (config.source) {
    case ModelSource::load: return std::make_shared<const ModalModel>(load_modal_data(config.model_path));
    case ModelSource::analytical:
      return std::make_shared<const ModalModel>(beam_modes_analytical(config.beam.length, config.beam.n_points, config.n_modes,
                                                                      BeamSection{config.beam.thickness, config.material}));
    case ModelSource::assemble:
      return std::make_shared<const ModalModel>(assemble_plate_model(config.plate, config.material, config.element_size, config.n_modes));
  }
  throw std::invalid_argument("unknown model source");
}

std::vector<ManifestRow> build_manifest(const EnvSuite& suite, const RunConfig& config) {
  const auto split = split_indices(suite.n_levels(), config.split_fraction, config.split_seed);
  std::vector<ManifestRow> rows(static_cast<std::size_t>(suite.n_levels()));
  for (int i = 0; i < suite.n_levels(); ++i) rows[static_cast<std::size_t>(i)].level = suite.base_level(i);
  for (std::size_t r = 0; r < split.train.size(); ++r) {
    auto& row = rows[static_cast<std::size_t>(split.train[r])];
    row.train = true;
    row.train_rank = static_cast<int>(r);
  }
  return rows;
}

std::vector<EnvLevel> select_levels(const std::vector<ManifestRow>& manifest, LevelSelector selector) {
  std::vector<EnvLevel> out;
  for (const auto& row : manifest)
    if (selector == LevelSelector::all || (selector == LevelSelector::train) == row.train) out.push_back(row.level);
  return out;
}

void cmd_model(const RunConfig& config) {
  const auto model = obtain_model(config);
  const fs::path dir = fs::path(config.out_dir) / "model";
  fs::create_directories(dir);
  save_modal_data(dir / "modal.txt", *model);
  std::ostringstream csv;
  csv << "mode,frequency_hz\n";
  for (std::size_t k = 0; k < model->frequencies.size(); ++k) csv << k + 1 << ',' << num(model->frequencies[k]) << '\n';
  write_file(dir / "frequencies.csv", csv.str());
  std::cout << "modes:";
  for (std::size_t k = 0; k < model->frequencies.size(); ++k) std::cout << ' ' << short_num(model->frequencies[k]) << " Hz";
  std::cout << "\nwrote " << (dir / "modal.txt").string() << '\n';
}

void cmd_train(const RunConfig& config, const TrainCommandOptions& options) {
  const auto model = obtain_model(config);
  const auto suite = make_suite(model, config);
  const auto manifest = build_manifest(*suite, config);
  const auto training = select_levels(manifest, LevelSelector::train);
  if (training.empty()) throw std::invalid_argument("split produced no training levels");

  const fs::path run = config.out_dir;
  if (options.resume) {
    const auto snapshot = run / "config.json";
    if (!fs::exists(snapshot)) throw std::runtime_error("missing checkpoint: no run in " + run.string());
    if (config_hash(load_config(snapshot)) != config_hash(config))
      throw std::invalid_argument("config differs from the interrupted run");
  }
  fs::create_directories(run / "model");
  write_file(run / "config.json", canonical_json(config));
  save_modal_data(run / "model" / "modal.txt", *model);
  {
    std::ostringstream m;
    write_level_manifest(m, manifest);
    write_file(run / "levels.txt", m.str());
  }

  TrainOptions topt;
  topt.seed = config.seed;
  topt.budget_steps = config.budget_steps;
  topt.episode_length = config.episode_length;
  topt.checkpoint_interval = config.checkpoint_interval;
  topt.run_dir = run;
  topt.resume = options.resume;
  topt.halt_after = options.halt_after;
  topt.config_hash = config_hash(config);
  const auto total = planned_updates(config.budget_steps, config.agent);
  if (options.verbose) {
    topt.on_update = [total](const UpdateRecord& r) {
      if (r.update % 10 == 0 || r.update == total)
        std::cerr << "update " << r.update << '/' << total << " steps " << r.env_steps << " score " << short_num(r.mean_score)
                  << " final_det " << short_num(r.mean_final_det) << '\n';
    };
  }
  const auto result = train(suite, training, config.curriculum, config.agent, topt);
  if (options.verbose)
    std::cout << "trained " << result.updates_done << " updates (" << result.env_steps << " env steps) into " << run.string()
              << '\n';
}

EvalReport cmd_eval(const fs::path& run_dir, LevelSelector selector) {
  const auto snapshot = run_dir / "config.json";
  if (!fs::exists(snapshot)) throw std::runtime_error("missing checkpoint: no run in " + run_dir.string());
  const RunConfig config = load_config(snapshot);
  const auto ckpt_path = latest_checkpoint(run_dir);
  if (ckpt_path.empty()) throw std::runtime_error("missing checkpoint in " + run_dir.string());
  auto model = std::make_shared<const ModalModel>(load_modal_data(run_dir / "model" / "modal.txt"));
  const auto suite = make_suite(model, config);
  std::ifstream min(run_dir / "levels.txt");
  if (!min) throw std::runtime_error("missing level manifest in " + run_dir.string());
  const auto manifest = read_level_manifest(min);
  const auto levels = select_levels(manifest, selector);
  if (levels.empty()) throw std::invalid_argument("level selector '" + to_string(selector) + "' matches no levels");

  const auto ckpt = read_checkpoint(ckpt_path);
  ActorCritic net(ckpt.shape);
  net.set_params(ckpt.params);
  const auto report = evaluate(net, suite, levels, eval_options(config));
  const auto labels = split_labels(manifest, levels);

  const fs::path out = run_dir / ("eval-" + to_string(selector));
  fs::create_directories(out);
  std::ostringstream csv, episodes, summary;
  write_eval_csv(csv, report, labels);
  write_episode_csv(episodes, report);
  write_file(out / "report.csv", csv.str());
  write_file(out / "episodes.csv", episodes.str());

  summary << "# Evaluation (" << (report.options.greedy ? "greedy" : "stochastic") << " actions, "
          << (report.options.randomize_init ? "random" : "fixed") << " start, " << report.options.n_episodes
          << " episodes, checkpoint " << ckpt_path.filename().string() << ")\n\n"
          << "| Environment | Split | Agent mean ± std | EfI | Solved rate |\n|---|---|---|---|---|\n";
  std::vector<std::string> cats;
  std::vector<double> rates;
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const auto& l = report.levels[i];
    const auto label = level_label(l.level.theta);
    summary << "| " << label << " | " << (labels[i] == "train" ? "seen" : "holdout") << " | " << short_num(l.mean) << " ± "
            << short_num(l.stddev) << " | " << short_num(l.efi_det) << " | " << short_num(l.solved_rate) << " |\n";
    cats.push_back(label);
    rates.push_back(l.solved_rate);
    if (l.mac.size() > 0) {
      std::vector<std::string> modes;
      for (int k = l.level.theta.first; k <= l.level.theta.last; ++k) modes.push_back("mode " + std::to_string(k));
      write_file(out / ("mac-" + label + ".svg"), svg::heatmap(l.mac, modes, "MAC " + label));
    }
  }
  write_file(out / "summary.md", summary.str());
  write_file(out / "solved_rate.svg", svg::bar_chart(cats, {{"agent", rates}}, "Solved rate against EfI", 1.0));
  std::cout << summary.str();
  return report;
}

void cmd_ablate(const RunConfig& config, const std::vector<int>& edit_counts, bool verbose) {
  config.validate();
  if (edit_counts.empty()) throw std::invalid_argument("--edits needs at least one count");
  for (int k : edit_counts)
    if (k < 1 || k > config.n_sensors) throw std::invalid_argument("edit count " + std::to_string(k) + " outside 1..n_sensors");

  const fs::path root = fs::path(config.out_dir) / "ablate";
  std::vector<EvalReport> reports;
  for (int k : edit_counts) {
    RunConfig sub = config;
    sub.curriculum.n_edits = k;
    sub.out_dir = (root / ("edits-" + std::to_string(k))).string();
    if (verbose) std::cerr << "ablation: " << k << " edited sensor(s)\n";
    cmd_train(sub, {false, -1, verbose});
    reports.push_back(cmd_eval(sub.out_dir, LevelSelector::train));
  }

  std::ostringstream csv, md;
  csv << "environment";
  md << "| Environment |";
  for (int k : edit_counts) {
    csv << ",accel_" << k << "_edit_mean,accel_" << k << "_edit_std";
    md << " ACCEL-" << k << " Edit |";
  }
  csv << '\n';
  md << "\n|---|";
  for (std::size_t i = 0; i < edit_counts.size(); ++i) md << "---|";
  md << '\n';
  const auto n_levels = reports.front().levels.size();
  std::vector<double> col_sum(edit_counts.size(), 0.0);
  std::vector<std::string> cats;
  std::vector<svg::Series> series;
  for (int k : edit_counts) series.push_back({"ACCEL-" + std::to_string(k) + " Edit", {}});
  for (std::size_t li = 0; li < n_levels; ++li) {
    const auto label = level_label(reports.front().levels[li].level.theta);
    cats.push_back(label);
    csv << label;
    md << "| " << label << " |";
    for (std::size_t r = 0; r < reports.size(); ++r) {
      const auto& l = reports[r].levels[li];
      csv << ',' << num(l.mean) << ',' << num(l.stddev);
      md << ' ' << short_num(l.mean) << " ± " << short_num(l.stddev) << " |";
      col_sum[r] += l.mean;
      series[r].values.push_back(l.solved_rate);
    }
    csv << '\n';
    md << '\n';
  }
  csv << "mean";
  md << "| Mean |";
  for (double s : col_sum) {
    csv << ',' << num(s / static_cast<double>(n_levels)) << ',';
    md << ' ' << short_num(s / static_cast<double>(n_levels)) << " |";
  }
  csv << '\n';
  md << '\n';
  write_file(root / "ablation.csv", csv.str());
  write_file(root / "ablation.md", md.str());
  write_file(root / "solved_rate.svg", svg::bar_chart(cats, series, "Solved rate by number of edited sensors", 1.0));
  std::cout << md.str();
}

void cmd_baseline(const RunConfig& config, LevelSelector selector) {
  const auto model = obtain_model(config);
  const auto suite = make_suite(model, config);
  const auto manifest = build_manifest(*suite, config);
  const auto levels = select_levels(manifest, selector);
  if (levels.empty()) throw std::invalid_argument("level selector '" + to_string(selector) + "' matches no levels");

  std::ostringstream csv;
  csv << "level,theta,split,efi_det,efi_config,exhaustive_det,exhaustive_config,oracle_verified,note\n";
  for (const auto& level : levels) {
    const auto& ctx = suite->context(level.level_index);
    std::string note;
    std::string efi_det = "nan", efi_cfg;
    try {
      const auto cfg = effective_independence(*model, level.theta, config.n_sensors);
      efi_cfg = join_cells(cfg);
      efi_det = num(det_fim(ctx, cfg));
    } catch (const DegenerateCovariance& e) {
      note = e.what();
    } catch (const std::invalid_argument& e) {
      note = e.what();
    } catch (const std::runtime_error& e) {
      note = e.what();
    }
    std::string ex_det, ex_cfg;
    bool verified = false;
    try {
      const auto ex = exhaustive_best(ctx, config.eval.exhaustive_budget);
      ex_det = num(ex.det);
      ex_cfg = join_cells(ex.config);
      verified = true;
    } catch (const BudgetExceeded&) {
      note += note.empty() ? "budget exceeded" : "; budget exceeded";
    }
    csv << level.level_index << ",\"" << level.theta.label() << "\","
        << (manifest[static_cast<std::size_t>(level.level_index)].train ? "train" : "holdout") << ',' << efi_det << ','
        << efi_cfg << ',' << ex_det << ',' << ex_cfg << ',' << (verified ? "yes" : "no") << ",\"" << note << "\"\n";
  }
  const fs::path dir = fs::path(config.out_dir) / "baseline";
  fs::create_directories(dir);
  write_file(dir / "baseline.csv", csv.str());
  std::cout << csv.str();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Adaptive sensor placement with curriculum-trained agents"};
  app.require_subcommand(1);
  std::string config_path, out, levels = "all";
  std::int64_t seed = -1;
  std::vector<int> edits;
  bool resume = false;
  std::int64_t halt_after = -1;

  auto* model = app.add_subcommand("model", "Solve the modal model and write it to disk");
  auto* train_cmd = app.add_subcommand("train", "Train an agent under the dual curriculum");
  auto* eval = app.add_subcommand("eval", "Evaluate the latest checkpoint of a run");
  auto* ablate = app.add_subcommand("ablate", "Compare numbers of edited sensors");
  auto* baseline = app.add_subcommand("baseline", "Effective-independence and exhaustive baselines");
  for (auto* sub : {model, train_cmd, ablate, baseline}) sub->add_option("--config", config_path, "JSON run config")->required();
  eval->add_option("--config", config_path, "JSON run config (its out_dir names the run)");
  for (auto* sub : {model, train_cmd, eval, ablate, baseline}) {
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Output directory (run directory for eval)");
  }
  eval->add_option("--levels", levels, "train | holdout | all");
  baseline->add_option("--levels", levels, "train | holdout | all");
  ablate->add_option("--edits", edits, "Comma-separated edit counts")->delimiter(',')->required();
  train_cmd->add_flag("--resume", resume, "Continue from the latest checkpoint");
  train_cmd->add_option("--halt-after", halt_after, "Stop after this many updates")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto load = [&]() {
      RunConfig c = load_config(config_path);
      if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
      if (!out.empty()) c.out_dir = out;
      c.validate();
      return c;
    };
    if (model->parsed()) cmd_model(load());
    else if (train_cmd->parsed()) cmd_train(load(), {resume, halt_after, true});
    else if (eval->parsed()) {
      const auto sel = selector_from_string(levels);
      fs::path run = out;
      if (run.empty()) {
        if (config_path.empty()) throw std::invalid_argument("eval needs --out <run dir> or --config");
        run = load().out_dir;
      }
      cmd_eval(run, sel);
    } else if (ablate->parsed()) cmd_ablate(load(), edits);
    else if (baseline->parsed()) {
      const auto sel = selector_from_string(levels);
      cmd_baseline(load(), sel);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace modalcur::cli
