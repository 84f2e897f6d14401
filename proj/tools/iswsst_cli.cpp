// Command-line front end. Links only against the C interface.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iswsst/iswsst.h"

namespace {

int exit_code(iswsst_status status) {
  switch (status) {
    case ISWSST_OK: return 0;
    case ISWSST_ERR_IO:
    case ISWSST_ERR_FORMAT: return 2;
    default: return 1;
  }
}

int fail(iswsst_status status) {
  std::fprintf(stderr, "error: %s\n", iswsst_last_error());
  return exit_code(status);
}

#define CHECK(call)                                 \
  do {                                              \
    const iswsst_status status_ = (call);           \
    if (status_ != ISWSST_OK) return fail(status_); \
  } while (0)

struct ConfigHandle {
  iswsst_config* ptr = nullptr;
  ~ConfigHandle() { iswsst_config_free(ptr); }
};

struct ModelHandle {
  iswsst_model* ptr = nullptr;
  ~ModelHandle() { iswsst_model_free(ptr); }
};

std::string csv_line(const char* split, const iswsst_metrics& m, int header) {
  std::size_t needed = 0;
  iswsst_format_metrics_csv(split, &m, header, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  iswsst_format_metrics_csv(split, &m, header, buf.data(), buf.size(), &needed);
  buf.resize(needed - 1);
  return buf;
}

struct TrainArgs {
  std::string config, data, out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  ConfigHandle cfg;
  if (a.config.empty()) {
    CHECK(iswsst_config_create(&cfg.ptr));
  } else {
    CHECK(iswsst_config_load(a.config.c_str(), &cfg.ptr));
  }
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
      return 1;
    }
    CHECK(iswsst_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  ModelHandle model;
  CHECK(iswsst_model_create(cfg.ptr, &model.ptr));
  auto progress = [](std::size_t step, double loss, void*) {
    if (step % 100 == 0) std::fprintf(stderr, "step %zu loss %.6f\n", step, loss);
  };
  double final_loss = NAN;
  CHECK(iswsst_model_train(model.ptr, a.data.c_str(), a.quiet ? nullptr : +progress, nullptr, &final_loss));
  CHECK(iswsst_model_save(model.ptr, a.out.c_str()));

  std::size_t n = 0;
  CHECK(iswsst_model_fusion_weights(model.ptr, nullptr, 0, &n));
  std::vector<double> weights(n);
  CHECK(iswsst_model_fusion_weights(model.ptr, weights.data(), n, &n));
  std::printf("final_loss,%.6f\n", final_loss);
  for (std::size_t d = 0; d < n; ++d) {
    char name[64];
    std::size_t needed = 0;
    CHECK(iswsst_model_domain_name(model.ptr, d, name, sizeof name, &needed));
    std::printf("lambda_%s,%.6f\n", name, weights[d]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-domain wavelet segmentation toolkit"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model on a dataset directory");
  train->add_option("--config", train_args.config, "Key-value configuration file");
  train->add_option("--set", train_args.overrides, "Override a configuration entry (KEY=VALUE)");
  train->add_option("--data", train_args.data, "Directory of .msrs/.lbls pairs")->required();
  train->add_option("--out", train_args.out, "Checkpoint path (a .cfg sidecar is written beside it)")->required();
  train->add_flag("--quiet", train_args.quiet, "Suppress per-step progress");

  std::string model_path, input, output, bands;
  std::size_t window = 0, stride = 0;
  auto* predict = app.add_subcommand("predict", "Segment a raster with a trained model");
  predict->add_option("--model", model_path, "Checkpoint path")->required();
  predict->add_option("--input", input, "Input .msrs raster")->required();
  predict->add_option("--output", output, "Output .lbls path (a .bmp preview is written beside it)")->required();
  predict->add_option("--window", window, "Tile window in pixels (default: model size)");
  predict->add_option("--stride", stride, "Tile stride in pixels (default: half the window)");
  predict->add_option("--bands", bands, "Band tags overriding the raster's, e.g. nir,red,green,blue");

  std::string data_dir, split = "eval";
  auto* eval = app.add_subcommand("eval", "Evaluate a model and print CSV metrics");
  eval->add_option("--model", model_path, "Checkpoint path")->required();
  eval->add_option("--data", data_dir, "Directory of .msrs/.lbls pairs")->required();
  eval->add_option("--bands", bands, "Band tags overriding the rasters'");
  eval->add_option("--split", split, "Split name for the CSV row");

  std::size_t size = 64, levels = 2, channels = 4;
  std::uint64_t seed = 0;
  auto* roundtrip = app.add_subcommand("roundtrip-check", "Report the wavelet pyramid reconstruction error");
  roundtrip->add_option("--size", size, "Square image extent");
  roundtrip->add_option("--levels", levels, "Pyramid levels");
  roundtrip->add_option("--channels", channels, "Channel count");
  roundtrip->add_option("--seed", seed, "Random seed");

  std::size_t n = 16, synth_size = 32;
  std::string synth_out = "synth";
  bool dense = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic 4-band dataset");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--n", n, "Number of samples");
  synth->add_option("--size", synth_size, "Square tile extent (even, >= 16)");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_flag("--boundary-dense", dense, "Many small shapes");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks per block");
  gradcheck->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n", e.what());
    const CLI::App* scope = &app;
    for (auto* sub : app.get_subcommands()) scope = sub;
    std::fprintf(stderr, "%s", scope->help().c_str());
    return 1;
  }

  if (train->parsed()) return run_train(train_args);

  if (predict->parsed()) {
    ModelHandle model;
    CHECK(iswsst_model_load(model_path.c_str(), nullptr, &model.ptr));
    CHECK(iswsst_model_predict_file(model.ptr, input.c_str(), bands.empty() ? nullptr : bands.c_str(), window, stride,
                                    output.c_str()));
    std::printf("wrote %s\n", output.c_str());
    return 0;
  }

  if (eval->parsed()) {
    ModelHandle model;
    CHECK(iswsst_model_load(model_path.c_str(), nullptr, &model.ptr));
    iswsst_metrics metrics{};
    CHECK(iswsst_model_evaluate(model.ptr, data_dir.c_str(), bands.empty() ? nullptr : bands.c_str(), &metrics));
    std::printf("%s\n%s\n", csv_line(split.c_str(), metrics, 1).c_str(), csv_line(split.c_str(), metrics, 0).c_str());
    return 0;
  }

  if (roundtrip->parsed()) {
    double err = 0.0;
    CHECK(iswsst_roundtrip_check(size, levels, channels, seed, &err));
    std::printf("size,levels,channels,max_error\n%zu,%zu,%zu,%.3e\n", size, levels, channels, err);
    return err <= 1e-10 ? 0 : 1;
  }

  if (synth->parsed()) {
    CHECK(iswsst_synth_write(seed, n, synth_size, dense ? 1 : 0, synth_out.c_str()));
    std::printf("wrote %zu samples to %s\n", n, synth_out.c_str());
    return 0;
  }

  if (gradcheck->parsed()) {
    std::printf("block,max_rel_error,checked,pass\n");
    auto row = [](const char* block, double err, std::size_t checked, int passed, void*) {
      std::printf("%s,%.3e,%zu,%s\n", block, err, checked, passed ? "yes" : "no");
    };
    int all = 0;
    CHECK(iswsst_gradcheck(seed, row, nullptr, &all));
    return all ? 0 : 1;
  }
  return 1;
}
