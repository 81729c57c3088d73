#include "tbps/core/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tbps/core/errors.hpp"

namespace tbps::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;

MatMap as_mat(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MatMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

// Builds the output node and, when needed, wires it into the graph.
Tensor make_result(Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                   const char* op, BackwardFn backward) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   const char* op, BackwardFn backward) {
  std::vector<Tensor> v(inputs);
  return make_result(std::move(shape), std::move(data), std::span<const Tensor>(v), op,
                     std::move(backward));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  std::vector<double> out(m * n);
  as_mat(out, m, n).noalias() = as_mat(a.node()->data, m, k) * as_mat(b.node()->data, k, n);
  return make_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](TensorNode& o) {
    auto& an = *o.inputs[0];
    auto& bn = *o.inputs[1];
    auto g = as_mat(o.grad, m, n);
    if (an.requires_grad)
      as_mat(an.ensure_grad(), m, k).noalias() += g * as_mat(bn.data, k, n).transpose();
    if (bn.requires_grad)
      as_mat(bn.ensure_grad(), k, n).noalias() += as_mat(an.data, m, k).transpose() * g;
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k)
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_str(a.shape()) +
                         " x transpose " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  as_mat(out, m, n).noalias() =
      as_mat(a.node()->data, m, k) * as_mat(b.node()->data, n, k).transpose();
  return make_result({m, n}, std::move(out), {a, b}, "matmul_nt", [m, k, n](TensorNode& o) {
    auto& an = *o.inputs[0];
    auto& bn = *o.inputs[1];
    auto g = as_mat(o.grad, m, n);
    if (an.requires_grad) as_mat(an.ensure_grad(), m, k).noalias() += g * as_mat(bn.data, n, k);
    if (bn.requires_grad)
      as_mat(bn.ensure_grad(), n, k).noalias() += g.transpose() * as_mat(an.data, m, k);
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  as_mat(out, n, m) = as_mat(a.node()->data, m, n).transpose();
  return make_result({n, m}, std::move(out), {a}, "transpose", [m, n](TensorNode& o) {
    auto& an = *o.inputs[0];
    as_mat(an.ensure_grad(), m, n) += as_mat(o.grad, n, m).transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& ad = a.data();
  const auto& bd = b.data();
  if (a.shape() == b.shape()) {
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
    return make_result(a.shape(), std::move(out), {a, b}, "add", [](TensorNode& o) {
      for (auto* in : {o.inputs[0].get(), o.inputs[1].get()}) {
        if (!in->requires_grad) continue;
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    });
  }
  const std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != 1 || b.cols() != n)
    throw DimensionError("add: cannot broadcast " + shape_str(b.shape()) + " onto " +
                         shape_str(a.shape()));
  std::vector<double> out(ad.size());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = ad[r * n + c] + bd[c];
  return make_result(a.shape(), std::move(out), {a, b}, "add_row", [m, n](TensorNode& o) {
    auto& an = *o.inputs[0];
    auto& bn = *o.inputs[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += o.grad[r * n + c];
    }
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += c;
  return make_result(a.shape(), std::move(out), {a}, "add_scalar", [](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= c;
  return make_result(a.shape(), std::move(out), {a}, "scale", [c](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * o.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, "mul", [](TensorNode& o) {
    auto& an = *o.inputs[0];
    auto& bn = *o.inputs[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bn.data[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * an.data[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] / bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, "div", [](TensorNode& o) {
    auto& an = *o.inputs[0];
    auto& bn = *o.inputs[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] / bn.data[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] -= o.grad[i] * an.data[i] / (bn.data[i] * bn.data[i]);
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(a.shape(), std::move(out), {a}, "relu", [](TensorNode& o) {
    auto& in = *o.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in.data[i] > 0.0) g[i] += o.grad[i];
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
  return make_result(a.shape(), std::move(out), {a}, "gelu", [](TensorNode& o) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    auto& in = *o.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = in.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      g[i] += o.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n)
      throw DimensionError("concat_rows: column mismatch " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result({m, n}, std::move(out), parts, "concat_rows", [](TensorNode& o) {
    std::size_t offset = 0;
    for (auto& in : o.inputs) {
      const std::size_t len = in->data.size();
      if (in->requires_grad) {
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) g[i] += o.grad[offset + i];
      }
      offset += len;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rows() != m)
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    widths.push_back(p.cols());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  std::size_t col = 0;
  for (const auto& p : parts) {
    const auto pd = p.data();
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(pd.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * n + col));
    col += w;
  }
  return make_result({m, n}, std::move(out), parts, "concat_cols",
                     [m, n, widths](TensorNode& o) {
                       std::size_t col = 0;
                       for (std::size_t k = 0; k < o.inputs.size(); ++k) {
                         auto& in = *o.inputs[k];
                         const std::size_t w = widths[k];
                         if (in.requires_grad) {
                           auto& g = in.ensure_grad();
                           for (std::size_t r = 0; r < m; ++r)
                             for (std::size_t c = 0; c < w; ++c)
                               g[r * w + c] += o.grad[r * n + col + c];
                         }
                         col += w;
                       }
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > m)
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_str(a.shape()));
  auto first = a.data().begin() + static_cast<std::ptrdiff_t>(begin * n);
  std::vector<double> out(first, first + static_cast<std::ptrdiff_t>(count * n));
  return make_result({count, n}, std::move(out), {a}, "slice_rows",
                     [begin, n](TensorNode& o) {
                       auto& g = o.inputs[0]->ensure_grad();
                       for (std::size_t i = 0; i < o.grad.size(); ++i)
                         g[begin * n + i] += o.grad[i];
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > n)
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_str(a.shape()));
  std::vector<double> out(m * count);
  const auto ad = a.data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < count; ++c) out[r * count + c] = ad[r * n + begin + c];
  return make_result({m, count}, std::move(out), {a}, "slice_cols",
                     [m, n, begin, count](TensorNode& o) {
                       auto& g = o.inputs[0]->ensure_grad();
                       for (std::size_t r = 0; r < m; ++r)
                         for (std::size_t c = 0; c < count; ++c)
                           g[r * n + begin + c] += o.grad[r * count + c];
                     });
}

Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> key_mask) {
  const std::size_t m = a.rows(), n = a.cols();
  if (!key_mask.empty() && key_mask.size() != n)
    throw DimensionError("softmax_rows: mask length " + std::to_string(key_mask.size()) +
                         " does not match row length " + std::to_string(n));
  const auto ad = a.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = ad.data() + r * n;
    double* dst = out.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false, nan = false;
    for (std::size_t c = 0; c < n; ++c)
      if (key_mask.empty() || key_mask[c]) {
        any = true;
        nan = nan || std::isnan(row[c]);
        mx = std::max(mx, row[c]);
      }
    if (!any) throw DimensionError("softmax_rows: row has no unmasked entries");
    if (nan || !std::isfinite(mx)) {
      // Non-finite scores propagate so the caller's finiteness check fires.
      for (std::size_t c = 0; c < n; ++c)
        if (key_mask.empty() || key_mask[c]) dst[c] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!key_mask.empty() && !key_mask[c]) continue;
      dst[c] = std::exp(row[c] - mx);
      total += dst[c];
    }
    for (std::size_t c = 0; c < n; ++c) dst[c] /= total;
  }
  return make_result(a.shape(), std::move(out), {a}, "softmax_rows", [m, n](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = o.data.data() + r * n;
      const double* gy = o.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const auto ad = a.data();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = ad.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += std::exp(row[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = row[c] - lse;
  }
  return make_result(a.shape(), std::move(out), {a}, "log_softmax_rows", [m, n](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = o.data.data() + r * n;
      const double* gy = o.grad.data() + r * n;
      double gsum = 0.0;
      for (std::size_t c = 0; c < n; ++c) gsum += gy[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += gy[c] - std::exp(y[c]) * gsum;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be positive");
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n)
    throw DimensionError("layer_norm: affine shapes " + shape_str(gamma.shape()) + ", " +
                         shape_str(beta.shape()) + " do not match row length " +
                         std::to_string(n));
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<double> out(m * n);
  // normalised values and inverse std are needed by the backward rule
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xd.data() + r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += row[c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mu) * is;
      (*xhat)[r * n + c] = h;
      out[r * n + c] = h * gd[c] + bd[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta}, "layer_norm",
                     [m, n, xhat, inv_std](TensorNode& o) {
                       auto& xn = *o.inputs[0];
                       auto& gn = *o.inputs[1];
                       auto& bn = *o.inputs[2];
                       if (gn.requires_grad) {
                         auto& g = gn.ensure_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < n; ++c)
                             g[c] += o.grad[r * n + c] * (*xhat)[r * n + c];
                       }
                       if (bn.requires_grad) {
                         auto& g = bn.ensure_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < n; ++c) g[c] += o.grad[r * n + c];
                       }
                       if (xn.requires_grad) {
                         auto& g = xn.ensure_grad();
                         const double inv_n = 1.0 / static_cast<double>(n);
                         for (std::size_t r = 0; r < m; ++r) {
                           double sum_dh = 0.0, sum_dh_h = 0.0;
                           for (std::size_t c = 0; c < n; ++c) {
                             const double dh = o.grad[r * n + c] * gn.data[c];
                             sum_dh += dh;
                             sum_dh_h += dh * (*xhat)[r * n + c];
                           }
                           for (std::size_t c = 0; c < n; ++c) {
                             const double dh = o.grad[r * n + c] * gn.data[c];
                             const double h = (*xhat)[r * n + c];
                             g[r * n + c] +=
                                 (*inv_std)[r] * (dh - inv_n * sum_dh - h * inv_n * sum_dh_h);
                           }
                         }
                       }
                     });
}

Tensor l2_normalize_rows(const Tensor& a, double eps) {
  const std::size_t m = a.rows(), n = a.cols();
  const auto ad = a.data();
  std::vector<double> out(m * n);
  auto norms = std::make_shared<std::vector<double>>(m);
  for (std::size_t r = 0; r < m; ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < n; ++c) ss += ad[r * n + c] * ad[r * n + c];
    const double nrm = std::max(std::sqrt(ss), eps);
    (*norms)[r] = nrm;
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = ad[r * n + c] / nrm;
  }
  return make_result(a.shape(), std::move(out), {a}, "l2_normalize_rows",
                     [m, n, norms, eps](TensorNode& o) {
                       auto& g = o.inputs[0]->ensure_grad();
                       for (std::size_t r = 0; r < m; ++r) {
                         const double nrm = (*norms)[r];
                         const double* y = o.data.data() + r * n;
                         const double* gy = o.grad.data() + r * n;
                         if (nrm <= eps) {
                           for (std::size_t c = 0; c < n; ++c) g[r * n + c] += gy[c] / nrm;
                           continue;
                         }
                         double dot = 0.0;
                         for (std::size_t c = 0; c < n; ++c) dot += y[c] * gy[c];
                         for (std::size_t c = 0; c < n; ++c)
                           g[r * n + c] += (gy[c] - y[c] * dot) / nrm;
                       }
                     });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  const std::size_t v = table.rows(), n = table.cols();
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  std::vector<double> out(ids.size() * n);
  const auto td = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= v)
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                           " out of range for table " + shape_str(table.shape()));
    std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(ids[i] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return make_result({ids.size(), n}, std::move(out), {table}, "gather_rows",
                     [idv, n](TensorNode& o) {
                       auto& g = o.inputs[0]->ensure_grad();
                       for (std::size_t i = 0; i < idv.size(); ++i)
                         for (std::size_t c = 0; c < n; ++c) g[idv[i] * n + c] += o.grad[i * n + c];
                     });
}

Tensor take(const Tensor& a, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DimensionError("take: empty index list");
  std::vector<double> out(indices.size());
  const auto ad = a.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= ad.size())
      throw DimensionError("take: index " + std::to_string(indices[i]) + " out of range for " +
                           shape_str(a.shape()));
    out[i] = ad[indices[i]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result({idx.size()}, std::move(out), {a}, "take", [idx](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += o.grad[i];
  });
}

Tensor diagonal(const Tensor& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("diagonal: matrix not square " + shape_str(a.shape()));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i * n + i;
  return take(a, idx);
}

Tensor row_sums(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const auto ad = a.data();
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r] += ad[r * n + c];
  return make_result({m}, std::move(out), {a}, "row_sums", [m, n](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += o.grad[r];
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({1}, {total}, {a}, "sum", [](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({1}, {total * inv}, {a}, "mean", [inv](TensorNode& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (auto& v : g) v += o.grad[0] * inv;
  });
}

}  // namespace tbps::ops
