#include "ranl/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ranl/errors.hpp"

namespace ranl::ops {
namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw DimensionError(std::string(op) + ": " + detail);
}

void require_rank1(const char* op, const char* name, Var v) {
  if (v.shape().rank != 1) shape_error(op, std::string(name) + " must be rank-1, got " + v.shape().str());
}

void require_rank2(const char* op, const char* name, Var v) {
  if (v.shape().rank != 2) shape_error(op, std::string(name) + " must be rank-2, got " + v.shape().str());
}

template <std::size_t K>
Var record(Tensor out, std::array<Var, K> inputs, Tape::BackwardFn fn) {
  return inputs[0].tape().record(std::move(out), inputs, std::move(fn));
}

}  // namespace

Var affine(Var W, Var x, Var b) {
  require_rank2("affine", "W", W);
  require_rank1("affine", "x", x);
  require_rank1("affine", "b", b);
  const std::size_t m = W.shape().rows;
  const std::size_t n = W.shape().cols;
  if (x.size() != n || b.size() != m) {
    shape_error("affine", "W " + W.shape().str() + ", x " + x.shape().str() + ", b " + b.shape().str());
  }
  const Tensor& w = W.value();
  const Tensor& xv = x.value();
  Tensor out(Shape::vector(m));
  for (std::size_t i = 0; i < m; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < n; ++j) acc += w.at(i, j) * xv[j];
    out[i] = acc;
  }
  const std::size_t wi = W.id(), xi = x.id(), bi = b.id();
  return record<3>(std::move(out), {W, x, b}, [wi, xi, bi, m, n](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const Tensor& w = t.value(wi);
    const Tensor& xv = t.value(xi);
    if (auto gw = t.grad(wi); !gw.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += g[i] * xv[j];
    }
    if (auto gx = t.grad(xi); !gx.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[j] += w.at(i, j) * g[i];
    }
    if (auto gb = t.grad(bi); !gb.empty()) {
      for (std::size_t i = 0; i < m; ++i) gb[i] += g[i];
    }
  });
}

Var matvec(Var M, Var x) {
  require_rank2("matvec", "M", M);
  require_rank1("matvec", "x", x);
  const std::size_t m = M.shape().rows;
  const std::size_t n = M.shape().cols;
  if (x.size() != n) shape_error("matvec", "M " + M.shape().str() + ", x " + x.shape().str());
  const Tensor& mv = M.value();
  const Tensor& xv = x.value();
  Tensor out(Shape::vector(m));
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += mv.at(i, j) * xv[j];
    out[i] = acc;
  }
  const std::size_t mi = M.id(), xi = x.id();
  return record<2>(std::move(out), {M, x}, [mi, xi, m, n](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const Tensor& mv = t.value(mi);
    const Tensor& xv = t.value(xi);
    if (auto gm = t.grad(mi); !gm.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gm[i * n + j] += g[i] * xv[j];
    }
    if (auto gx = t.grad(xi); !gx.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[j] += mv.at(i, j) * g[i];
    }
  });
}

Var vecmat(Var alpha, Var G) {
  require_rank1("vecmat", "alpha", alpha);
  require_rank2("vecmat", "G", G);
  const std::size_t rows = G.shape().rows;
  const std::size_t d = G.shape().cols;
  if (alpha.size() != rows) shape_error("vecmat", "alpha " + alpha.shape().str() + ", G " + G.shape().str());
  const Tensor& a = alpha.value();
  const Tensor& gv = G.value();
  Tensor out(Shape::vector(d));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += a[i] * gv.at(i, j);
  const std::size_t ai = alpha.id(), gi = G.id();
  return record<2>(std::move(out), {alpha, G}, [ai, gi, rows, d](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const Tensor& a = t.value(ai);
    const Tensor& gv = t.value(gi);
    if (auto ga = t.grad(ai); !ga.empty()) {
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < d; ++j) ga[i] += gv.at(i, j) * g[j];
    }
    if (auto gg = t.grad(gi); !gg.empty()) {
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < d; ++j) gg[i * d + j] += a[i] * g[j];
    }
  });
}

Var tanh_map(Var x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  const std::size_t xi = x.id();
  return record<1>(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    auto g = t.grad(self);
    const Tensor& y = t.value(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    // Split by sign so exp never overflows.
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  const std::size_t xi = x.id();
  return record<1>(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    auto g = t.grad(self);
    const Tensor& y = t.value(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax_vec(Var s) {
  require_rank1("softmax_vec", "s", s);
  if (s.size() == 0) shape_error("softmax_vec", "empty input");
  const Tensor& sv = s.value();
  const double mx = *std::max_element(sv.values().begin(), sv.values().end());
  Tensor out(s.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(sv[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= total;
  const std::size_t si = s.id();
  return record<1>(std::move(out), {s}, [si](Tape& t, std::size_t self) {
    auto gs = t.grad(si);
    if (gs.empty()) return;
    auto g = t.grad(self);
    const Tensor& p = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) gs[i] += p[i] * (g[i] - dot);
  });
}

Var hadamard(Var a, Var b) {
  if (!(a.shape() == b.shape())) shape_error("hadamard", "a " + a.shape().str() + ", b " + b.shape().str());
  Tensor out(a.shape());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return record<2>(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (auto ga = t.grad(ai); !ga.empty()) {
      const Tensor& bv = t.value(bi);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (auto gb = t.grad(bi); !gb.empty()) {
      const Tensor& av = t.value(ai);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add(Var a, Var b) {
  if (!(a.shape() == b.shape())) shape_error("add", "a " + a.shape().str() + ", b " + b.shape().str());
  Tensor out(a.shape());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return record<2>(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t id : {ai, bi}) {
      if (auto gi = t.grad(id); !gi.empty()) {
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
      }
    }
  });
}

Var add_scalar(Var x, Var s) {
  require_rank1("add_scalar", "x", x);
  if (s.size() != 1) shape_error("add_scalar", "s must hold one value, got " + s.shape().str());
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  const double sv = s[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + sv;
  const std::size_t xi = x.id(), si = s.id();
  return record<2>(std::move(out), {x, s}, [xi, si](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (auto gx = t.grad(xi); !gx.empty()) {
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    }
    if (auto gs = t.grad(si); !gs.empty()) {
      for (double v : g) gs[0] += v;
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  const std::size_t xi = x.id();
  return record<1>(std::move(out), {x}, [xi, factor](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    auto g = t.grad(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * factor;
  });
}

Var mean_rows(Var M) {
  require_rank2("mean_rows", "M", M);
  const std::size_t k = M.shape().rows;
  const std::size_t d = M.shape().cols;
  if (k == 0) shape_error("mean_rows", "no rows");
  const Tensor& mv = M.value();
  Tensor out(Shape::vector(d));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < d; ++j) out[j] += mv.at(r, j);
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(k);
  const std::size_t mi = M.id();
  return record<1>(std::move(out), {M}, [mi, k, d](Tape& t, std::size_t self) {
    auto gm = t.grad(mi);
    if (gm.empty()) return;
    auto g = t.grad(self);
    const double inv = 1.0 / static_cast<double>(k);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < d; ++j) gm[r * d + j] += g[j] * inv;
  });
}

Var concat(Var a, Var b) {
  require_rank1("concat", "a", a);
  require_rank1("concat", "b", b);
  const std::size_t p = a.size();
  std::vector<double> values(a.value().values().begin(), a.value().values().end());
  values.insert(values.end(), b.value().values().begin(), b.value().values().end());
  const std::size_t ai = a.id(), bi = b.id();
  return record<2>(Tensor::vector(std::move(values)), {a, b}, [ai, bi, p](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (auto ga = t.grad(ai); !ga.empty()) {
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    }
    if (auto gb = t.grad(bi); !gb.empty()) {
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[p + i];
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) shape_error("stack_rows", "no rows");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_rank1("stack_rows", "row", rows[r]);
    if (rows[r].size() != d) {
      shape_error("stack_rows", "row " + std::to_string(r) + " is " + rows[r].shape().str() + ", expected [" +
                                    std::to_string(d) + "]");
    }
    const auto v = rows[r].value().values();
    values.insert(values.end(), v.begin(), v.end());
    ids.push_back(rows[r].id());
  }
  Tensor out = Tensor::matrix(rows.size(), d, std::move(values));
  return rows.front().tape().record(std::move(out), rows, [ids = std::move(ids), d](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      auto gr = t.grad(ids[r]);
      if (gr.empty()) continue;
      for (std::size_t j = 0; j < d; ++j) gr[j] += g[r * d + j];
    }
  });
}

Var row(Var M, std::size_t r) {
  require_rank2("row", "M", M);
  if (r >= M.shape().rows) {
    throw IndexError("row: index " + std::to_string(r) + " out of range for " + M.shape().str());
  }
  const std::size_t d = M.shape().cols;
  const auto src = M.value().row(r);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  const std::size_t mi = M.id();
  return record<1>(std::move(out), {M}, [mi, r, d](Tape& t, std::size_t self) {
    auto gm = t.grad(mi);
    if (gm.empty()) return;
    auto g = t.grad(self);
    for (std::size_t j = 0; j < d; ++j) gm[r * d + j] += g[j];
  });
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  require_rank1("slice", "x", x);
  if (offset + length > x.size()) {
    shape_error("slice", "[" + std::to_string(offset) + ", " + std::to_string(offset + length) + ") of " +
                             x.shape().str());
  }
  const auto src = x.value().values().subspan(offset, length);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  const std::size_t xi = x.id();
  return record<1>(std::move(out), {x}, [xi, offset](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    auto g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
  });
}

Var flatten(Var x) {
  const auto v = x.value().values();
  Tensor out = Tensor::vector(std::vector<double>(v.begin(), v.end()));
  const std::size_t xi = x.id();
  return record<1>(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    auto g = t.grad(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

Var embed_lookup(Var table, std::size_t index) {
  require_rank2("embed_lookup", "table", table);
  if (index >= table.shape().rows) {
    throw IndexError("embed_lookup: token id " + std::to_string(index) + " out of range for table " +
                     table.shape().str());
  }
  return row(table, index);
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const std::size_t xi = x.id();
  return record<1>(Tensor::vector({acc}), {x}, [xi](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    const double g = t.grad(self)[0];
    for (double& v : gx) v += g;
  });
}

Var sum_squares(Var x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v * v;
  const std::size_t xi = x.id();
  return record<1>(Tensor::vector({acc}), {x}, [xi](Tape& t, std::size_t self) {
    auto gx = t.grad(xi);
    if (gx.empty()) return;
    const double g = t.grad(self)[0];
    const Tensor& xv = t.value(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * xv[i] * g;
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  require_rank1("cross_entropy", "logits", logits);
  const std::size_t c = logits.size();
  if (c < 2) shape_error("cross_entropy", "need at least 2 classes, got " + logits.shape().str());
  if (target >= c) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(c) + " classes");
  }
  const Tensor& z = logits.value();
  const double mx = *std::max_element(z.values().begin(), z.values().end());
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) total += std::exp(z[i] - mx);
  const double log_norm = mx + std::log(total);
  const double loss = log_norm - z[target];
  const std::size_t li = logits.id();
  return record<1>(Tensor::vector({loss}), {logits}, [li, target, log_norm](Tape& t, std::size_t self) {
    auto gl = t.grad(li);
    if (gl.empty()) return;
    const double g = t.grad(self)[0];
    const Tensor& z = t.value(li);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double p = std::exp(z[i] - log_norm);
      gl[i] += g * (p - (i == target ? 1.0 : 0.0));
    }
  });
}

}  // namespace ranl::ops
