// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

// tppi: command-line front end.
//
// Exit codes: 0 success; 1 runtime error or (verify) argmax disagreement;
// 2 network not image-to-image / untransformable; 3 training diverged.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "tppi/tppi.hpp"

namespace fs = std::filesystem;
using tppi::detail::concat;

namespace {

constexpr int kExitError = 1;
constexpr int kExitNotTppi = 2;
constexpr int kExitDiverged = 3;

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw tppi::Error(concat("cannot write ", path));
  out << j.dump(2) << '\n';
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw tppi::Error(concat("cannot write ", path));
  out << text;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  std::size_t h = 0, w = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    h = std::stoul(s.substr(0, x));
    w = std::stoul(s.substr(x + 1));
  } catch (const std::exception&) {
    throw tppi::Error(concat("--image-size: expected HxW, got '", s, "'"));
  }
  if (!h || !w) throw tppi::Error("--image-size: dimensions must be positive");
  return {h, w};
}

void print_violations(const std::vector<tppi::Violation>& v) {
  std::cerr << "error: network is not image-to-image\n";
  for (const auto& x : v) std::cerr << "  [rule " << x.rule << "] " << x.layer_id << ": " << x.message << '\n';
}

tppi::TrainConfig load_train_config(const std::string& path) {
  tppi::TrainConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw tppi::Error(concat("cannot open ", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw tppi::FormatError(concat(path, ": ", e.what()));
  }
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.batchnorm_warmup = j.value("batchnorm_warmup", cfg.batchnorm_warmup);
  const auto precision = j.value("precision", std::string("f32"));
  if (precision == "f64") cfg.precision = tppi::Precision::f64;
  else if (precision != "f32") throw tppi::Error(concat(path, ": /precision: expected \"f32\" or \"f64\""));
  return cfg;
}

std::string flops_table(const tppi::FlopsReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "layer" << std::setw(28) << "image-mode MACs" << std::setw(28)
      << "patch-mode MACs / pixel" << "ratio\n";
  for (const auto& l : r.layers) {
    if (!l.counted()) continue;
    const double ratio = l.image_macs ? double(l.patch_macs) / double(l.image_macs) : 0.0;
    out << std::setw(14) << l.id << std::setw(28) << l.image_formula << std::setw(28) << l.patch_pixel_formula
        << ratio << '\n';
  }
  out << "total image MACs " << r.image_total << ", patch MACs " << r.patch_total << " for " << r.height << "x"
      << r.width << '\n';
  out << "patch/image = " << r.ratio() << ", m^2 = " << r.m * r.m << '\n';
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-to-image inference toolkit for hyperspectral classification"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "worker threads (default: TPPI_THREADS or 1)");
  app.add_option("--seed", seed, "seed for every random choice");

  // transform
  auto* c_transform = app.add_subcommand("transform", "rewrite a pixel classifier into an image-to-image net");
  std::string t_in, t_out, t_report;
  c_transform->add_option("--in", t_in)->required();
  c_transform->add_option("--out", t_out)->required();
  c_transform->add_option("--report", t_report, "report JSON path (default: stdout)");

  // predict
  auto* c_predict = app.add_subcommand("predict", "classify every pixel of a cube");
  std::string p_net, p_cube, p_mode = "image", p_out, p_logits, p_labels, p_gt, p_metrics, p_palette;
  bool p_pad_full = false;
  std::size_t p_tile = 32;
  c_predict->add_option("--net", p_net)->required();
  c_predict->add_option("--cube", p_cube)->required();
  c_predict->add_option("--mode", p_mode)->check(CLI::IsMember({"patch", "image", "tiled"}));
  c_predict->add_flag("--pad-full", p_pad_full, "mirror-pad so the map matches the cube size");
  c_predict->add_option("--tile", p_tile, "tile edge for --mode tiled");
  c_predict->add_option("--out", p_out, "class map as binary PPM")->required();
  c_predict->add_option("--labels", p_labels, "class map as a label raster (header + .u16)");
  c_predict->add_option("--logits", p_logits, "per-class probabilities as a cube (header + .f32)");
  c_predict->add_option("--palette", p_palette, "palette file: class_id R G B name");
  c_predict->add_option("--gt", p_gt, "ground truth for OA/AA/Kappa");
  c_predict->add_option("--metrics", p_metrics, "metrics JSON path (default: stdout)");

  // train
  auto* c_train = app.add_subcommand("train", "train a network on labeled pixels");
  std::string tr_net, tr_cube, tr_gt, tr_cfg, tr_out, tr_log;
  double tr_train = 0.20, tr_val = 0.16;
  c_train->add_option("--net-template", tr_net)->required();
  c_train->add_option("--cube", tr_cube)->required();
  c_train->add_option("--gt", tr_gt)->required();
  c_train->add_option("--cfg", tr_cfg, "JSON with batch_size, lr, momentum, weight_decay, epochs, seed, precision");
  c_train->add_option("--out", tr_out)->required();
  c_train->add_option("--log", tr_log, "training log JSON (default: <out stem>.log.json)");
  c_train->add_option("--train-fraction", tr_train);
  c_train->add_option("--val-fraction", tr_val);

  // verify
  auto* c_verify = app.add_subcommand("verify", "compare image mode against patch mode on every pixel");
  std::string v_net, v_cube, v_report;
  double v_tol = 0.0;
  c_verify->add_option("--net", v_net)->required();
  c_verify->add_option("--cube", v_cube)->required();
  c_verify->add_option("--tolerance", v_tol);
  c_verify->add_option("--report", v_report, "report JSON path (default: stdout)");

  // flops
  auto* c_flops = app.add_subcommand("flops", "count multiply-accumulates for both modes");
  std::string f_net, f_size, f_json;
  bool f_two = false;
  c_flops->add_option("--net", f_net)->required();
  c_flops->add_option("--image-size", f_size, "HxW")->required();
  c_flops->add_option("--json", f_json, "report JSON path");
  c_flops->add_flag("--count-multiply-add-as-two", f_two);

  // bench
  auto* c_bench = app.add_subcommand("bench", "time both prediction modes");
  std::string b_net, b_cube, b_modes = "patch,image", b_json;
  std::size_t b_runs = 5, b_batch = 100;
  c_bench->add_option("--net", b_net)->required();
  c_bench->add_option("--cube", b_cube)->required();
  c_bench->add_option("--modes", b_modes);
  c_bench->add_option("--runs", b_runs);
  c_bench->add_option("--batch", b_batch);
  c_bench->add_option("--json", b_json, "report JSON path (default: stdout)");

  // sweep
  auto* c_sweep = app.add_subcommand("sweep", "time both modes over several patch sizes");
  std::string s_cube, s_gt, s_json, s_csv;
  std::vector<std::size_t> s_m = {3, 5, 7, 9};
  std::size_t s_runs = 5, s_classes = 4, s_epochs = 0;
  c_sweep->add_option("--m-list", s_m)->delimiter(',');
  c_sweep->add_option("--cube", s_cube)->required();
  c_sweep->add_option("--gt", s_gt, "ground truth; with --epochs > 0 each net is trained and scored");
  c_sweep->add_option("--epochs", s_epochs);
  c_sweep->add_option("--classes", s_classes, "class count when no ground truth is given");
  c_sweep->add_option("--runs", s_runs);
  c_sweep->add_option("--json", s_json);
  c_sweep->add_option("--csv", s_csv);

  // gen
  auto* c_gen = app.add_subcommand("gen", "write a synthetic scene");
  tppi::SceneSpec g_spec;
  std::string g_cube, g_gt;
  c_gen->add_option("--height", g_spec.height);
  c_gen->add_option("--width", g_spec.width);
  c_gen->add_option("--bands", g_spec.bands);
  c_gen->add_option("--classes", g_spec.classes);
  c_gen->add_option("--regions", g_spec.regions);
  c_gen->add_option("--noise", g_spec.noise_sigma);
  c_gen->add_option("--unlabeled", g_spec.unlabeled_fraction);
  c_gen->add_option("--cube", g_cube)->required();
  c_gen->add_option("--gt", g_gt)->required();

  // preset
  auto* c_preset = app.add_subcommand("preset", "write a preset network");
  std::string n_name, n_out;
  std::size_t n_bands = 200, n_classes = 16, n_m = 7;
  bool n_init = true;
  c_preset->add_option("--name", n_name)->required()->check(CLI::IsMember({"ssrn", "presnet", "compact", "random"}));
  c_preset->add_option("--bands", n_bands);
  c_preset->add_option("--classes", n_classes);
  c_preset->add_option("-m,--patch", n_m, "patch size for compact/random");
  c_preset->add_option("--init", n_init, "He-initialize weights");
  c_preset->add_option("--out", n_out)->required();

  CLI11_PARSE(app, argc, argv);
  if (threads) tppi::set_num_threads(threads);

  try {
    if (*c_transform) {
      const auto net = tppi::load_network(t_in);
      try {
        const auto [out, rep] = tppi::transform(net);
        tppi::save_network(out, t_out);
        write_json(tppi::to_json(rep), t_report);
      } catch (const tppi::TransformError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNotTppi;
      }
    } else if (*c_predict) {
      const auto net = tppi::load_network(p_net);
      const auto cube = tppi::load_cube(p_cube);
      const bool keep_logits = !p_logits.empty();
      tppi::PredictOptions opts;
      opts.retain_logits = keep_logits;
      const tppi::Model<float> model(net);
      tppi::ClassificationMap map;
      try {
        if (p_mode == "patch") map = tppi::predict_patchwise(model, cube, tppi::PixelSelection::all(), opts);
        else if (p_mode == "image") map = tppi::predict_image(model, cube, p_pad_full, opts);
        else map = tppi::predict_tiled(model, cube, p_tile, p_pad_full, opts);
      } catch (const tppi::TppiViolationError& e) {
        print_violations(e.violations);
        return kExitNotTppi;
      }
      const auto palette = p_palette.empty() ? tppi::default_palette(map.num_classes) : tppi::load_palette(p_palette);
      tppi::save_map(map, palette, p_out);
      if (!p_labels.empty()) tppi::save_gt(tppi::map_as_labels(map), p_labels);
      if (keep_logits) tppi::save_cube(tppi::probability_planes(map), p_logits);
      if (!p_gt.empty()) write_json(tppi::to_json(tppi::evaluate_map(map, tppi::load_gt(p_gt))), p_metrics);
      std::cerr << "map " << map.height << "x" << map.width << " written to " << p_out << '\n';
    } else if (*c_train) {
      auto net = tppi::load_network(tr_net);
      const auto cube = tppi::load_cube(tr_cube);
      const auto gt = tppi::load_gt(tr_gt);
      auto cfg = load_train_config(tr_cfg);
      if (app.count("--seed")) cfg.seed = seed;
      const auto ds = tppi::split_dataset(gt, net.sample_size, {tr_train, tr_val, cfg.seed, true});
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
      const std::string log_path =
          tr_log.empty() ? (fs::path(tr_out).parent_path() / (fs::path(tr_out).stem().string() + ".log.json")).string()
                         : tr_log;
      try {
        const auto result = tppi::train(net, cube, ds, cfg);
        tppi::save_network(result.net, tr_out);
        write_json(tppi::to_json(result.log), log_path);
        std::cerr << "best val OA " << result.log.best_val_oa << " at epoch " << result.log.best_epoch << '\n';
      } catch (const tppi::DivergenceError& e) {
        tppi::save_network(e.last_good, tr_out);
        std::cerr << "error: " << e.what() << "; last good weights written to " << tr_out << '\n';
        return kExitDiverged;
      }
    } else if (*c_verify) {
      const auto net = tppi::load_network(v_net);
      const auto cube = tppi::load_cube(v_cube);
      try {
        const auto rep = tppi::verify_equivalence(net, cube, v_tol);
        write_json(tppi::to_json(rep), v_report);
        return rep.argmax_disagreements == 0 ? 0 : kExitError;
      } catch (const tppi::TppiViolationError& e) {
        print_violations(e.violations);
        return kExitNotTppi;
      }
    } else if (*c_flops) {
      const auto net = tppi::load_network(f_net);
      const auto [h, w] = parse_size(f_size);
      tppi::FlopsOptions opts;
      opts.multiply_add_as_two = f_two;
      const auto rep = tppi::count_flops(net, h, w, opts);
      std::cout << flops_table(rep);
      if (!f_json.empty()) write_json(tppi::to_json(rep), f_json);
    } else if (*c_bench) {
      const auto net = tppi::load_network(b_net);
      const auto cube = tppi::load_cube(b_cube);
      tppi::BenchOptions opts;
      opts.runs = b_runs;
      opts.batch = b_batch;
      opts.seed = seed;
      opts.patch = b_modes.find("patch") != std::string::npos;
      opts.image = b_modes.find("image") != std::string::npos;
      if (!opts.patch && !opts.image) throw tppi::Error("--modes: expected patch, image or patch,image");
      try {
        write_json(tppi::to_json(tppi::bench(net, cube, opts)), b_json);
      } catch (const tppi::TppiViolationError& e) {
        print_violations(e.violations);
        return kExitNotTppi;
      }
    } else if (*c_sweep) {
      const auto cube = tppi::load_cube(s_cube);
      std::optional<tppi::GroundTruth> gt;
      if (!s_gt.empty()) gt = tppi::load_gt(s_gt);
      tppi::SweepOptions opts;
      opts.m_values = s_m;
      opts.runs = s_runs;
      opts.classes = s_classes;
      opts.seed = seed;
      if (gt && s_epochs) {
        tppi::TrainConfig cfg;
        cfg.epochs = s_epochs;
        cfg.seed = seed;
        opts.train = cfg;
      }
      const auto rep = tppi::sweep(cube, gt ? &*gt : nullptr, opts);
      if (!s_csv.empty()) write_text(rep.csv(), s_csv);
      else std::cout << rep.csv();
      if (!s_json.empty()) write_json(tppi::to_json(rep), s_json);
    } else if (*c_gen) {
      g_spec.seed = seed;
      const auto scene = tppi::gen_synthetic(g_spec);
      tppi::save_cube(scene.cube, g_cube);
      tppi::save_gt(scene.gt, g_gt);
    } else if (*c_preset) {
      tppi::NetworkGraph net;
      if (n_name == "ssrn") net = tppi::ssrn_like(n_bands, n_classes);
      else if (n_name == "presnet") net = tppi::presnet_like(n_bands, n_classes);
      else if (n_name == "compact") net = tppi::compact_tppi(n_bands, n_classes, n_m);
      else net = tppi::random_tppi_net(seed, n_bands, n_classes, n_m);
      if (n_init) tppi::he_initialize(net, seed);
      tppi::save_network(net, n_out);
    }
  } catch (const tppi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
