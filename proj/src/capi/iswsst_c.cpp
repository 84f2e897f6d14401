#include "iswsst/iswsst.h"

#include <cmath>
#include <cstring>
#include <string>

#include "iswsst/config.hpp"
#include "iswsst/error.hpp"
#include "iswsst/gradcheck.hpp"
#include "iswsst/model.hpp"
#include "iswsst/synth.hpp"
#include "iswsst/train.hpp"
#include "iswsst/wavelet.hpp"

struct iswsst_config {
  iswsst::KeyValueConfig entries;
};

struct iswsst_model {
  iswsst::ModelConfig model_config;
  iswsst::TrainConfig train_config;
  iswsst::Model model;
};

namespace {

thread_local std::string g_last_error;

template <class F>
iswsst_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return ISWSST_OK;
  } catch (const iswsst::FormatError& e) {
    g_last_error = e.what();
    return ISWSST_ERR_FORMAT;
  } catch (const iswsst::IoError& e) {
    g_last_error = e.what();
    return ISWSST_ERR_IO;
  } catch (const iswsst::NumericError& e) {
    g_last_error = e.what();
    return ISWSST_ERR_NUMERIC;
  } catch (const iswsst::ContractError& e) {
    g_last_error = e.what();
    return ISWSST_ERR_CONTRACT;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return ISWSST_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return ISWSST_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw iswsst::ContractError(std::string("null pointer: ") + name);
}

void copy_out(const std::string& text, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (!buf || cap == 0) return;
  if (cap < text.size() + 1) throw iswsst::ContractError("buffer of " + std::to_string(cap) + " bytes is too small");
  std::memcpy(buf, text.c_str(), text.size() + 1);
}

struct Resolved {
  iswsst::ModelConfig model;
  iswsst::TrainConfig train;
};

Resolved resolve(const iswsst::KeyValueConfig& kv) {
  Resolved r;
  iswsst::apply_config(kv, r.model, r.train);
  return r;
}

std::vector<iswsst::BandTag> bands_or_empty(const char* bands) {
  if (!bands || !*bands) return {};
  return iswsst::parse_band_list(bands);
}

void fill_metrics(const iswsst::MetricsReport& report, iswsst_metrics* out) {
  if (report.n_classes > ISWSST_MAX_CLASSES) throw iswsst::ContractError("too many classes for iswsst_metrics");
  out->oa = report.oa;
  out->miou = report.miou;
  out->n_classes = report.n_classes;
  for (std::size_t c = 0; c < report.n_classes; ++c) out->per_class_iou[c] = report.per_class_iou[c];
}

}  // namespace

extern "C" {

const char* iswsst_version(void) { return "1.0.0"; }

const char* iswsst_last_error(void) { return g_last_error.c_str(); }

iswsst_status iswsst_config_create(iswsst_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new iswsst_config{};
  });
}

iswsst_status iswsst_config_load(const char* path, iswsst_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto kv = iswsst::KeyValueConfig::load(path);
    resolve(kv);
    *out = new iswsst_config{std::move(kv)};
  });
}

iswsst_status iswsst_config_set(iswsst_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    auto candidate = config->entries;
    candidate.set(key, value);
    resolve(candidate);
    config->entries = std::move(candidate);
  });
}

iswsst_status iswsst_config_get(const iswsst_config* config, const char* key, char* buf, size_t cap,
                                size_t* needed) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    const auto r = resolve(config->entries);
    copy_out(iswsst::to_key_values(r.model, r.train).get(key), buf, cap, needed);
  });
}

iswsst_status iswsst_config_save(const iswsst_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    const auto r = resolve(config->entries);
    const std::string text = iswsst::to_key_values(r.model, r.train).to_string();
    iswsst::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  });
}

void iswsst_config_free(iswsst_config* config) { delete config; }

iswsst_status iswsst_model_create(const iswsst_config* config, iswsst_model** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    auto r = resolve(config->entries);
    iswsst::Model model(r.model, r.train.seed);
    *out = new iswsst_model{r.model, r.train, std::move(model)};
  });
}

iswsst_status iswsst_model_load(const char* checkpoint, const iswsst_config* config, iswsst_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    const auto kv = config ? config->entries : iswsst::KeyValueConfig::load(std::string(checkpoint) + ".cfg");
    auto r = resolve(kv);
    iswsst::Model model(r.model, r.train.seed);
    model.load(checkpoint);
    *out = new iswsst_model{r.model, r.train, std::move(model)};
  });
}

iswsst_status iswsst_model_save(const iswsst_model* model, const char* checkpoint) {
  return guarded([&] {
    require(model, "model");
    require(checkpoint, "checkpoint");
    model->model.save(checkpoint);
    const std::string text = iswsst::to_key_values(model->model_config, model->train_config).to_string();
    iswsst::write_file(std::string(checkpoint) + ".cfg",
                       std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  });
}

void iswsst_model_free(iswsst_model* model) { delete model; }

iswsst_status iswsst_model_train(iswsst_model* model, const char* data_dir, iswsst_progress_fn progress, void* user,
                                 double* final_loss) {
  return guarded([&] {
    require(model, "model");
    require(data_dir, "data_dir");
    const auto data = iswsst::load_dataset(data_dir, {});
    iswsst::TrainProgress hook;
    if (progress) hook = [&](std::size_t step, double loss) { progress(step, loss, user); };
    const auto result = iswsst::train(model->model, data, model->train_config, hook);
    if (final_loss) *final_loss = result.losses.empty() ? NAN : result.losses.back();
  });
}

iswsst_status iswsst_model_predict_file(const iswsst_model* model, const char* raster_path, const char* bands,
                                        size_t window, size_t stride, const char* out_path) {
  return guarded([&] {
    require(model, "model");
    require(raster_path, "raster_path");
    require(out_path, "out_path");
    const auto raster = iswsst::load_raster(raster_path, bands_or_empty(bands));
    iswsst::TileSpec spec;
    spec.window = window ? window : model->model_config.size;
    spec.stride = stride ? stride : std::max<std::size_t>(1, spec.window / 2);
    if (spec.stride > spec.window) throw iswsst::ContractError("tile stride must not exceed the window");
    iswsst::save_prediction(model->model.predict_tiled(raster, spec), out_path);
  });
}

iswsst_status iswsst_model_evaluate(const iswsst_model* model, const char* data_dir, const char* bands,
                                    iswsst_metrics* out) {
  return guarded([&] {
    require(model, "model");
    require(data_dir, "data_dir");
    require(out, "out");
    const auto data = iswsst::load_dataset(data_dir, bands_or_empty(bands));
    fill_metrics(iswsst::evaluate(model->model, data), out);
  });
}

iswsst_status iswsst_model_fusion_weights(const iswsst_model* model, double* out, size_t cap, size_t* count) {
  return guarded([&] {
    require(model, "model");
    const auto w = model->model.fusion_weights();
    if (count) *count = w.size();
    if (!out) return;
    if (cap < w.size()) throw iswsst::ContractError("fusion weight buffer holds " + std::to_string(cap) +
                                                    " values, model has " + std::to_string(w.size()));
    std::copy(w.begin(), w.end(), out);
  });
}

iswsst_status iswsst_model_domain_name(const iswsst_model* model, size_t domain, char* buf, size_t cap,
                                       size_t* needed) {
  return guarded([&] {
    require(model, "model");
    const auto names = model->model.domain_names();
    if (domain >= names.size()) throw iswsst::ContractError("domain index out of range");
    copy_out(names[domain], buf, cap, needed);
  });
}

iswsst_status iswsst_format_metrics_csv(const char* split, const iswsst_metrics* metrics, int header, char* buf,
                                        size_t cap, size_t* needed) {
  return guarded([&] {
    require(metrics, "metrics");
    if (metrics->n_classes > ISWSST_MAX_CLASSES) throw iswsst::ContractError("n_classes exceeds the metrics buffer");
    if (header) {
      copy_out(iswsst::metrics_csv_header(metrics->n_classes), buf, cap, needed);
      return;
    }
    iswsst::MetricsReport report;
    report.oa = metrics->oa;
    report.miou = metrics->miou;
    report.n_classes = metrics->n_classes;
    report.per_class_iou.assign(metrics->per_class_iou, metrics->per_class_iou + metrics->n_classes);
    copy_out(iswsst::metrics_csv_row(split ? split : "", report), buf, cap, needed);
  });
}

iswsst_status iswsst_synth_write(uint64_t seed, size_t n, size_t size, int boundary_dense, const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    iswsst::SynthOptions options;
    options.boundary_dense = boundary_dense != 0;
    iswsst::save_dataset(iswsst::synth_dataset(seed, n, size, options), dir);
  });
}

iswsst_status iswsst_roundtrip_check(size_t size, size_t levels, size_t channels, uint64_t seed, double* max_error) {
  return guarded([&] {
    require(max_error, "max_error");
    if (size == 0 || channels == 0) throw iswsst::ContractError("size and channels must be positive");
    iswsst::Rng rng(seed);
    const auto x = iswsst::uniform_tensor({channels, size, size}, 1.0, rng, iswsst::DType::F64);
    const auto pyramid = iswsst::encode_pyramid(x, levels);
    const auto y = iswsst::decode_pyramid(pyramid, pyramid.coarsest());
    double err = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) err = std::max(err, std::abs(x[i] - y[i]));
    *max_error = err;
  });
}

iswsst_status iswsst_gradcheck(uint64_t seed, iswsst_gradcheck_fn callback, void* user, int* all_passed) {
  return guarded([&] {
    bool ok = true;
    for (const auto& r : iswsst::run_block_gradchecks(seed)) {
      ok = ok && r.passed;
      if (callback) callback(r.block.c_str(), r.max_rel_error, r.checked, r.passed ? 1 : 0, user);
    }
    if (all_passed) *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
