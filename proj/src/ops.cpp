#include "iswsst/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iswsst/error.hpp"

namespace iswsst {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
  }
}

double sigmoid_value(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Sigmoid: return "sigmoid";
    case UnaryOp::Relu: return "relu";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
  }
  return "unary";
}

}  // namespace

Tensor elementwise(UnaryOp op, const Tensor& x) {
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    double v = in[i];
    switch (op) {
      case UnaryOp::Sigmoid: out[i] = sigmoid_value(v); break;
      case UnaryOp::Relu: out[i] = v > 0 ? v : 0.0; break;
      case UnaryOp::Cos: out[i] = std::cos(v); break;
      case UnaryOp::Sin: out[i] = std::sin(v); break;
      case UnaryOp::Abs: out[i] = std::abs(v); break;
      case UnaryOp::Neg: out[i] = -v; break;
      case UnaryOp::Exp: out[i] = std::exp(v); break;
      case UnaryOp::Log: out[i] = std::log(v); break;
    }
  }
  std::vector<double> y;
  if (grad_mode_enabled() && x.requires_grad()) y = out;
  return record_op(
      unary_name(op), x.shape(), x.dtype(), std::move(out), {x},
      [op, x, y = std::move(y)](std::span<const double> g, std::span<const std::span<double>> gin) {
        auto in = x.values();
        auto gx = gin[0];
        for (std::size_t i = 0; i < g.size(); ++i) {
          double v = in[i];
          double d = 0.0;
          switch (op) {
            case UnaryOp::Sigmoid: d = y[i] * (1.0 - y[i]); break;
            case UnaryOp::Relu: d = v > 0 ? 1.0 : 0.0; break;
            case UnaryOp::Cos: d = -std::sin(v); break;
            case UnaryOp::Sin: d = std::cos(v); break;
            case UnaryOp::Abs: d = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); break;
            case UnaryOp::Neg: d = -1.0; break;
            case UnaryOp::Exp: d = y[i]; break;
            case UnaryOp::Log: d = 1.0 / v; break;
          }
          gx[i] += g[i] * d;
        }
      });
}

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  bool same = a.shape() == b.shape();
  bool a_scalar = a.numel() == 1;
  bool b_scalar = b.numel() == 1;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError("elementwise operands do not broadcast: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const Tensor& big = (same || b_scalar) ? a : b;
  const std::size_t n = big.numel();
  auto av = a.values();
  auto bv = b.values();
  const std::size_t a_step = (a.numel() == n) ? 1 : 0;
  const std::size_t b_step = (b.numel() == n) ? 1 : 0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = av[i * a_step];
    double y = bv[i * b_step];
    switch (op) {
      case BinaryOp::Add: out[i] = x + y; break;
      case BinaryOp::Sub: out[i] = x - y; break;
      case BinaryOp::Mul: out[i] = x * y; break;
    }
  }
  const char* name = op == BinaryOp::Add ? "add" : op == BinaryOp::Sub ? "sub" : "mul";
  return record_op(name, big.shape(), promote(a.dtype(), b.dtype()), std::move(out), {a, b},
                   [op, a, b, a_step, b_step](std::span<const double> g,
                                              std::span<const std::span<double>> gin) {
                     auto av = a.values();
                     auto bv = b.values();
                     auto ga = gin[0];
                     auto gb = gin[1];
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       double da = 1.0;
                       double db = 1.0;
                       if (op == BinaryOp::Sub) db = -1.0;
                       if (op == BinaryOp::Mul) {
                         da = bv[i * b_step];
                         db = av[i * a_step];
                       }
                       if (!ga.empty()) ga[i * a_step] += g[i] * da;
                       if (!gb.empty()) gb[i * b_step] += g[i] * db;
                     }
                   });
}

Tensor add_scalar(const Tensor& x, double c) {
  auto in = x.values();
  std::vector<double> out(in.begin(), in.end());
  for (double& v : out) v += c;
  return record_op("add_scalar", x.shape(), x.dtype(), std::move(out), {x},
                   [](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
                   });
}

Tensor mul_scalar(const Tensor& x, double c) {
  auto in = x.values();
  std::vector<double> out(in.begin(), in.end());
  for (double& v : out) v *= c;
  return record_op("mul_scalar", x.shape(), x.dtype(), std::move(out), {x},
                   [c](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * c;
                   });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return record_op("matmul", {m, n}, promote(a.dtype(), b.dtype()), std::move(out), {a, b},
                   [a, b, m, k, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                     auto av = a.values();
                     auto bv = b.values();
                     auto ga = gin[0];
                     auto gb = gin[1];
                     // dA = G B^T, dB = A^T G
                     if (!ga.empty()) {
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t p = 0; p < k; ++p) {
                           double acc = 0.0;
                           for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
                           ga[i * k + p] += acc;
                         }
                       }
                     }
                     if (!gb.empty()) {
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t p = 0; p < k; ++p) {
                           const double aip = av[i * k + p];
                           if (aip == 0.0) continue;
                           for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                         }
                       }
                     }
                   });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  auto in = x.values();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  return record_op("transpose", {c, r}, x.dtype(), std::move(out), {x},
                   [r, c](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < c; ++j) gin[0][i * c + j] += g[j * r + i];
                   });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  auto in = x.values();
  return record_op("reshape", std::move(shape), x.dtype(), std::vector<double>(in.begin(), in.end()),
                   {x}, [](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
                   });
}

Tensor sum(const Tensor& x) {
  auto in = x.values();
  double total = 0.0;
  for (double v : in) total += v;
  return record_op("sum", {1}, x.dtype(), {total}, {x},
                   [](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (double& v : gin[0]) v += g[0];
                   });
}

Tensor mean(const Tensor& x) { return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax axis " + std::to_string(axis) + " invalid for " +
                         shape_str(x.shape()));
  }
  const auto& shape = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < inner; ++s) {
      const std::size_t base = o * len * inner + s;
      double mx = in[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, in[base + i * inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        double e = std::exp(in[base + i * inner] - mx);
        out[base + i * inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] /= z;
    }
  }
  std::vector<double> y = out;
  return record_op("softmax", shape, x.dtype(), std::move(out), {x},
                   [y = std::move(y), outer, inner, len](std::span<const double> g,
                                                         std::span<const std::span<double>> gin) {
                     for (std::size_t o = 0; o < outer; ++o) {
                       for (std::size_t s = 0; s < inner; ++s) {
                         const std::size_t base = o * len * inner + s;
                         double dot = 0.0;
                         for (std::size_t i = 0; i < len; ++i) {
                           dot += g[base + i * inner] * y[base + i * inner];
                         }
                         for (std::size_t i = 0; i < len; ++i) {
                           const std::size_t at = base + i * inner;
                           gin[0][at] += y[at] * (g[at] - dot);
                         }
                       }
                     }
                   });
}

Tensor select(const Tensor& x, std::size_t flat) {
  if (flat >= x.numel()) {
    throw DimensionError("select index " + std::to_string(flat) + " out of range for " +
                         shape_str(x.shape()));
  }
  return record_op("select", {1}, x.dtype(), {x.values()[flat]}, {x},
                   [flat](std::span<const double> g, std::span<const std::span<double>> gin) {
                     gin[0][flat] += g[0];
                   });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (count == 0 || begin + count > c) {
    throw DimensionError("column slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + shape_str(x.shape()));
  }
  auto in = x.values();
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = in[i * c + begin + j];
  return record_op("slice_cols", {r, count}, x.dtype(), std::move(out), {x},
                   [r, c, begin, count](std::span<const double> g,
                                        std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < count; ++j)
                         gin[0][i * c + begin + j] += g[i * count + j];
                   });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols needs at least one part");
  const std::size_t r = parts[0].dim(0);
  std::size_t c = 0;
  DType dtype = parts[0].dtype();
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != r) {
      throw DimensionError("concat_cols row mismatch: " + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    }
    widths.push_back(p.dim(1));
    c += p.dim(1);
    dtype = promote(dtype, p.dtype());
  }
  std::vector<double> out(r * c);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto in = p.values();
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * c + offset + j] = in[i * w + j];
    offset += w;
  }
  return record_op("concat_cols", {r, c}, dtype, std::move(out),
                   std::vector<Tensor>(parts.begin(), parts.end()),
                   [r, c, widths](std::span<const double> g, std::span<const std::span<double>> gin) {
                     std::size_t offset = 0;
                     for (std::size_t p = 0; p < widths.size(); ++p) {
                       const std::size_t w = widths[p];
                       if (!gin[p].empty()) {
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < w; ++j)
                             gin[p][i * w + j] += g[i * c + offset + j];
                       }
                       offset += w;
                     }
                   });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "add_row_vector");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (v.numel() != d) {
    throw DimensionError("add_row_vector: " + shape_str(x.shape()) + " with " + shape_str(v.shape()));
  }
  auto xv = x.values();
  auto vv = v.values();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] + vv[j];
  return record_op("add_row_vector", x.shape(), promote(x.dtype(), v.dtype()), std::move(out), {x, v},
                   [n, d](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < n; ++i) {
                       for (std::size_t j = 0; j < d; ++j) {
                         if (!gin[0].empty()) gin[0][i * d + j] += g[i * d + j];
                         if (!gin[1].empty()) gin[1][j] += g[i * d + j];
                       }
                     }
                   });
}

Tensor mul_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "mul_row_vector");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (v.numel() != d) {
    throw DimensionError("mul_row_vector: " + shape_str(x.shape()) + " with " + shape_str(v.shape()));
  }
  auto xv = x.values();
  auto vv = v.values();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] * vv[j];
  return record_op("mul_row_vector", x.shape(), promote(x.dtype(), v.dtype()), std::move(out), {x, v},
                   [x, v, n, d](std::span<const double> g, std::span<const std::span<double>> gin) {
                     auto xv = x.values();
                     auto vv = v.values();
                     for (std::size_t i = 0; i < n; ++i) {
                       for (std::size_t j = 0; j < d; ++j) {
                         if (!gin[0].empty()) gin[0][i * d + j] += g[i * d + j] * vv[j];
                         if (!gin[1].empty()) gin[1][j] += g[i * d + j] * xv[i * d + j];
                       }
                     }
                   });
}

Tensor add_col_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "add_col_vector");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (v.numel() != m) {
    throw DimensionError("add_col_vector: " + shape_str(x.shape()) + " with " + shape_str(v.shape()));
  }
  auto xv = x.values();
  auto vv = v.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + vv[i];
  return record_op("add_col_vector", x.shape(), promote(x.dtype(), v.dtype()), std::move(out), {x, v},
                   [m, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         if (!gin[0].empty()) gin[0][i * n + j] += g[i * n + j];
                         if (!gin[1].empty()) gin[1][i] += g[i * n + j];
                       }
                     }
                   });
}

Tensor standardize_rows(const Tensor& x, double eps) {
  require_rank(x, 2, "standardize_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  auto xv = x.values();
  std::vector<double> out(n * d);
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = (row[j] - mu) * inv_std[i];
  }
  std::vector<double> y = out;
  return record_op("standardize_rows", x.shape(), x.dtype(), std::move(out), {x},
                   [y = std::move(y), inv_std = std::move(inv_std), n, d](
                       std::span<const double> g, std::span<const std::span<double>> gin) {
                     // dx = inv_std * (g - mean(g) - y * mean(g * y))
                     for (std::size_t i = 0; i < n; ++i) {
                       double mg = 0.0, mgy = 0.0;
                       for (std::size_t j = 0; j < d; ++j) {
                         mg += g[i * d + j];
                         mgy += g[i * d + j] * y[i * d + j];
                       }
                       mg /= static_cast<double>(d);
                       mgy /= static_cast<double>(d);
                       for (std::size_t j = 0; j < d; ++j) {
                         gin[0][i * d + j] +=
                             inv_std[i] * (g[i * d + j] - mg - y[i * d + j] * mgy);
                       }
                     }
                   });
}

Tensor channel_mean(const Tensor& x) {
  require_rank(x, 3, "channel_mean");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  auto xv = x.values();
  std::vector<double> out(c, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t p = 0; p < hw; ++p) acc += xv[ch * hw + p];
    out[ch] = acc / static_cast<double>(hw);
  }
  return record_op("channel_mean", {c}, x.dtype(), std::move(out), {x},
                   [c, hw](std::span<const double> g, std::span<const std::span<double>> gin) {
                     const double scale = 1.0 / static_cast<double>(hw);
                     for (std::size_t ch = 0; ch < c; ++ch)
                       for (std::size_t p = 0; p < hw; ++p) gin[0][ch * hw + p] += g[ch] * scale;
                   });
}

Tensor scale_channels(const Tensor& x, const Tensor& gate) {
  require_rank(x, 3, "scale_channels");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  if (gate.numel() != c) {
    throw DimensionError("scale_channels: " + shape_str(x.shape()) + " with gate " +
                         shape_str(gate.shape()));
  }
  auto xv = x.values();
  auto gv = gate.values();
  std::vector<double> out(c * hw);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < hw; ++p) out[ch * hw + p] = xv[ch * hw + p] * gv[ch];
  return record_op("scale_channels", x.shape(), promote(x.dtype(), gate.dtype()), std::move(out),
                   {x, gate},
                   [x, gate, c, hw](std::span<const double> g, std::span<const std::span<double>> gin) {
                     auto xv = x.values();
                     auto gv = gate.values();
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       for (std::size_t p = 0; p < hw; ++p) {
                         const std::size_t at = ch * hw + p;
                         if (!gin[0].empty()) gin[0][at] += g[at] * gv[ch];
                         if (!gin[1].empty()) gin[1][ch] += g[at] * xv[at];
                       }
                     }
                   });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 3, "upsample_nearest");
  if (factor == 0) throw ContractError("upsample factor must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h * factor, ow = w * factor;
  auto xv = x.values();
  std::vector<double> out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        out[(ch * oh + i) * ow + j] = xv[(ch * h + i / factor) * w + j / factor];
  return record_op("upsample_nearest", {c, oh, ow}, x.dtype(), std::move(out), {x},
                   [c, h, w, factor, oh, ow](std::span<const double> g,
                                             std::span<const std::span<double>> gin) {
                     for (std::size_t ch = 0; ch < c; ++ch)
                       for (std::size_t i = 0; i < oh; ++i)
                         for (std::size_t j = 0; j < ow; ++j)
                           gin[0][(ch * h + i / factor) * w + j / factor] += g[(ch * oh + i) * ow + j];
                   });
}

Tensor nll_loss(const Tensor& probs, std::span<const std::uint8_t> labels) {
  require_rank(probs, 3, "nll_loss");
  const std::size_t k = probs.dim(0), hw = probs.dim(1) * probs.dim(2);
  if (labels.size() != hw) {
    throw DimensionError("nll_loss: probabilities " + shape_str(probs.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  constexpr double kFloor = 1e-12;
  auto pv = probs.values();
  double total = 0.0;
  for (std::size_t p = 0; p < hw; ++p) {
    if (labels[p] >= k) throw ContractError("label " + std::to_string(labels[p]) + " out of range");
    total -= std::log(std::max(pv[labels[p] * hw + p], kFloor));
  }
  std::vector<std::uint8_t> lab(labels.begin(), labels.end());
  return record_op("nll_loss", {1}, probs.dtype(), {total / static_cast<double>(hw)}, {probs},
                   [probs, lab = std::move(lab), hw](std::span<const double> g,
                                                     std::span<const std::span<double>> gin) {
                     auto pv = probs.values();
                     const double scale = g[0] / static_cast<double>(hw);
                     for (std::size_t p = 0; p < hw; ++p) {
                       const std::size_t at = lab[p] * hw + p;
                       if (pv[at] > kFloor) gin[0][at] -= scale / pv[at];
                     }
                   });
}

}  // namespace iswsst
