#include "topicpara/ops.hpp"

#include <algorithm>
#include <cmath>

#include "topicpara/error.hpp"

namespace topicpara {

namespace {

Tape& tape_of(Var v) {
  if (!v.valid()) throw Error("use of an unbound Var");
  return *v.tape();
}

void add_into(std::span<double> dst, std::span<const double> src, double factor = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

struct MatmulGeometry {
  std::size_t m, k, n;
  Shape out;
};

MatmulGeometry matmul_geometry(const Shape& a, const Shape& b) {
  if (a.size() == 2 && b.size() == 2) {
    if (a[1] != b[0]) throw ShapeError("matmul: inner dimensions differ " + to_string(a) + " x " + to_string(b));
    return {a[0], a[1], b[1], {a[0], b[1]}};
  }
  if (a.size() == 1 && b.size() == 2) {
    if (a[0] != b[0]) throw ShapeError("matmul: inner dimensions differ " + to_string(a) + " x " + to_string(b));
    return {1, a[0], b[1], {b[1]}};
  }
  if (a.size() == 2 && b.size() == 1) {
    if (a[1] != b[0]) throw ShapeError("matmul: inner dimensions differ " + to_string(a) + " x " + to_string(b));
    return {a[0], a[1], 1, {a[0]}};
  }
  if (a.size() == 1 && b.size() == 1) {
    if (a[0] != b[0]) throw ShapeError("matmul: inner dimensions differ " + to_string(a) + " x " + to_string(b));
    return {1, a[0], 1, {1}};
  }
  throw ShapeError("matmul: unsupported ranks " + to_string(a) + " x " + to_string(b));
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <class F, class D>
Var unary(Var a, const char* name, F f, D derivative) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(name, std::move(y), {a}, [a, derivative](Tape& t, const Tensor& g) {
    if (!t.requires_grad(a)) return;
    auto ga = t.grad(a);
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * derivative(x[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const MatmulGeometry geo = matmul_geometry(a.shape(), b.shape());
  Tensor out(geo.out);
  gemm_nn(a.value().values().data(), b.value().values().data(), out.values().data(), geo.m, geo.k, geo.n);
  return tape_of(a).record("matmul", std::move(out), {a, b}, [a, b, geo](Tape& t, const Tensor& g) {
    const double* gd = g.values().data();
    if (t.requires_grad(a)) {
      // dA[m x k] += G[m x n] * B^T
      double* ga = t.grad(a).data();
      const double* bd = b.value().values().data();
      for (std::size_t i = 0; i < geo.m; ++i) {
        for (std::size_t p = 0; p < geo.k; ++p) {
          const double* bp = bd + p * geo.n;
          const double* gi = gd + i * geo.n;
          double s = 0.0;
          for (std::size_t j = 0; j < geo.n; ++j) s += gi[j] * bp[j];
          ga[i * geo.k + p] += s;
        }
      }
    }
    if (t.requires_grad(b)) {
      // dB[k x n] += A^T * G
      double* gb = t.grad(b).data();
      const double* ad = a.value().values().data();
      for (std::size_t i = 0; i < geo.m; ++i) {
        const double* gi = gd + i * geo.n;
        for (std::size_t p = 0; p < geo.k; ++p) {
          const double av = ad[i * geo.k + p];
          if (av == 0.0) continue;
          double* gbp = gb + p * geo.n;
          for (std::size_t j = 0; j < geo.n; ++j) gbp[j] += av * gi[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  add_into(out.values(), b.value().values());
  return tape_of(a).record("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) add_into(t.grad(a), g.values());
    if (t.requires_grad(b)) add_into(t.grad(b), g.values());
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  add_into(out.values(), b.value().values(), -1.0);
  return tape_of(a).record("sub", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) add_into(t.grad(a), g.values());
    if (t.requires_grad(b)) add_into(t.grad(b), g.values(), -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape_of(a).record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      auto ga = t.grad(a);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad(b);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return tape_of(a).record("scale", std::move(out), {a}, [a, factor](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) add_into(t.grad(a), g.values(), factor);
  });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var sigmoid(Var a) {
  auto f = [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  return unary(a, "sigmoid", f, [f](double x) {
    const double y = f(x);
    return y * (1.0 - y);
  });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var add_row(Var matrix, Var row_vec) {
  const Tensor& m = matrix.value();
  const Tensor& r = row_vec.value();
  if (m.rank() != 2 || r.rank() != 1 || m.cols() != r.size()) {
    throw ShapeError("add_row: cannot add " + to_string(r.shape()) + " to rows of " + to_string(m.shape()));
  }
  Tensor out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) add_into(out.row(i), r.values());
  return tape_of(matrix).record("add_row", std::move(out), {matrix, row_vec}, [matrix, row_vec](Tape& t, const Tensor& g) {
    if (t.requires_grad(matrix)) add_into(t.grad(matrix), g.values());
    if (t.requires_grad(row_vec)) {
      auto gr = t.grad(row_vec);
      for (std::size_t i = 0; i < g.rows(); ++i) add_into(gr, g.row(i));
    }
  });
}

Var softmax(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1 || xv.size() == 0) throw ShapeError("softmax: needs a non-empty rank-1 tensor");
  if (!xv.all_finite()) throw NumericError("softmax: non-finite input");
  const double mx = *std::max_element(xv.values().begin(), xv.values().end());
  Tensor y(xv.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = std::exp(xv[i] - mx);
    total += y[i];
  }
  for (double& v : y.values()) v /= total;
  Tensor saved = y;
  return tape_of(x).record("softmax", std::move(y), {x}, [x, saved = std::move(saved)](Tape& t, const Tensor& g) {
    if (!t.requires_grad(x)) return;
    const double inner = dot(g.values(), saved.values());
    auto gx = t.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += saved[i] * (g[i] - inner);
  });
}

Var log_prob_of(Var logits, std::size_t index, std::span<const std::size_t> excluded) {
  const Tensor& xv = logits.value();
  if (xv.rank() != 1) throw ShapeError("log_prob_of: logits must be rank-1");
  if (index >= xv.size()) throw ShapeError("log_prob_of: index out of range");
  std::vector<char> allowed(xv.size(), 1);
  for (std::size_t e : excluded) {
    if (e < allowed.size()) allowed[e] = 0;
  }
  if (!allowed[index]) throw Error("log_prob_of: target index is excluded");
  double mx = -INFINITY;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (allowed[i]) mx = std::max(mx, xv[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (allowed[i]) total += std::exp(xv[i] - mx);
  }
  const double lse = mx + std::log(total);
  return tape_of(logits).record(
      "log_prob_of", Tensor::scalar(xv[index] - lse), {logits},
      [logits, index, lse, allowed = std::move(allowed)](Tape& t, const Tensor& g) {
        if (!t.requires_grad(logits)) return;
        const Tensor& xv = logits.value();
        auto gx = t.grad(logits);
        const double up = g[0];
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (!allowed[i]) continue;
          gx[i] -= up * std::exp(xv[i] - lse);
        }
        gx[index] += up;
      });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  std::vector<Var> kept;
  for (Var p : parts) {
    if (p.value().rank() != 1 || p.value().size() > 0) kept.push_back(p);
  }
  if (kept.empty()) throw ShapeError("concat: no non-empty parts");
  const Shape& first = kept.front().value().shape();
  const std::size_t rank = first.size();
  if (rank != 1 && rank != 2) throw ShapeError("concat: only rank 1 and 2 supported");
  if (axis >= rank) throw ShapeError("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (Var p : kept) {
    const Shape& s = p.value().shape();
    if (s.size() != rank) throw ShapeError("concat: mixed ranks");
    for (std::size_t d = 0; d < rank; ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ShapeError("concat: non-concatenated dimensions differ " + to_string(s) + " vs " + to_string(first));
      }
    }
    out_shape[axis] += s[axis];
  }
  // Axis 1 of a matrix interleaves rows; every other case is one contiguous block per part.
  const std::size_t outer = (rank == 2 && axis == 1) ? out_shape[0] : 1;
  const std::size_t out_inner = element_count(out_shape) / outer;
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (Var p : kept) {
    const Tensor& v = p.value();
    const std::size_t inner = v.size() / outer;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.values().begin() + o * inner, inner, out.values().begin() + o * out_inner + offset);
    }
    offset += inner;
  }
  return tape_of(kept.front())
      .record("concat", std::move(out), std::span<const Var>(kept), [kept, outer, out_inner](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (Var p : kept) {
          const std::size_t inner = p.value().size() / outer;
          if (t.requires_grad(p)) {
            auto gp = t.grad(p);
            for (std::size_t o = 0; o < outer; ++o) {
              for (std::size_t i = 0; i < inner; ++i) gp[o * inner + i] += g[o * out_inner + offset + i];
            }
          }
          offset += inner;
        }
      });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  const Tensor& v = x.value();
  if (v.rank() != 1 || offset + length > v.size()) throw ShapeError("slice: range out of bounds");
  Tensor out({length});
  std::copy_n(v.values().begin() + offset, length, out.values().begin());
  return tape_of(x).record("slice", std::move(out), {x}, [x, offset](Tape& t, const Tensor& g) {
    if (!t.requires_grad(x)) return;
    auto gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
  });
}

Var rows(Var matrix, std::size_t begin, std::size_t count) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2 || begin + count > v.rows()) throw ShapeError("rows: range out of bounds");
  const std::size_t c = v.cols();
  Tensor out({count, c});
  std::copy_n(v.values().begin() + begin * c, count * c, out.values().begin());
  return tape_of(matrix).record("rows", std::move(out), {matrix}, [matrix, begin, c](Tape& t, const Tensor& g) {
    if (!t.requires_grad(matrix)) return;
    auto gm = t.grad(matrix);
    for (std::size_t i = 0; i < g.size(); ++i) gm[begin * c + i] += g[i];
  });
}

Var row(Var matrix, std::size_t r) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2 || r >= v.rows()) throw ShapeError("row: index out of bounds");
  return reshape(rows(matrix, r, 1), {v.cols()});
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return tape_of(x).record("reshape", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    if (t.requires_grad(x)) add_into(t.grad(x), g.values());
  });
}

Var mean_pool_columns(Var matrix) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2) throw ShapeError("mean_pool_columns: needs a rank-2 tensor");
  if (v.rows() == 0) throw ShapeError("mean_pool_columns: no rows");
  const std::size_t m = v.rows();
  Tensor out({v.cols()});
  for (std::size_t i = 0; i < m; ++i) add_into(out.values(), v.row(i));
  for (double& x : out.values()) x /= static_cast<double>(m);
  return tape_of(matrix).record("mean_pool_columns", std::move(out), {matrix}, [matrix, m](Tape& t, const Tensor& g) {
    if (!t.requires_grad(matrix)) return;
    auto gm = t.grad(matrix);
    const std::size_t c = g.size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += g[j] / static_cast<double>(m);
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return tape_of(x).record("sum", Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    if (!t.requires_grad(x)) return;
    for (double& v : t.grad(x)) v += g[0];
  });
}

Var l1_distance(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "l1_distance");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  return tape_of(a).record("l1_distance", Tensor::scalar(s), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    if (t.requires_grad(a)) {
      auto ga = t.grad(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * sign(av[i] - bv[i]);
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[0] * sign(av[i] - bv[i]);
    }
  });
}

Var dropout(Var x, double rate, RngStream& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw Error("dropout: rate must be below 1");
  Tensor mask(x.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mul(x, tape_of(x).constant(std::move(mask)));
}

BatchNormResult batch_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("batch_norm: needs [N x D]");
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  if (gamma.value().shape() != Shape{d} || beta.value().shape() != Shape{d}) {
    throw ShapeError("batch_norm: gamma/beta must be [" + std::to_string(d) + "]");
  }
  Tensor mean({d});
  Tensor var({d});
  for (std::size_t i = 0; i < n; ++i) add_into(mean.values(), xv.row(i));
  for (double& v : mean.values()) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv.at(i, j) - mean[j];
      var[j] += c * c;
    }
  }
  for (double& v : var.values()) v /= static_cast<double>(n);
  Tensor inv_std({d});
  for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
  Tensor xhat({n, d});
  Tensor out({n, d});
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      xhat.at(i, j) = (xv.at(i, j) - mean[j]) * inv_std[j];
      out.at(i, j) = gv[j] * xhat.at(i, j) + bv[j];
    }
  }
  Var y = tape_of(x).record(
      "batch_norm", std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std, n, d](Tape& t, const Tensor& g) {
        const Tensor& gv = gamma.value();
        if (t.requires_grad(gamma) || t.requires_grad(beta)) {
          Tensor dgamma({d});
          Tensor dbeta({d});
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
              dgamma[j] += g.at(i, j) * xhat.at(i, j);
              dbeta[j] += g.at(i, j);
            }
          }
          if (t.requires_grad(gamma)) add_into(t.grad(gamma), dgamma.values());
          if (t.requires_grad(beta)) add_into(t.grad(beta), dbeta.values());
        }
        if (!t.requires_grad(x)) return;
        auto gx = t.grad(x);
        const double nn = static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) {
          double sum_dxhat = 0.0;
          double sum_dxhat_xhat = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dxh = g.at(i, j) * gv[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat.at(i, j);
          }
          for (std::size_t i = 0; i < n; ++i) {
            const double dxh = g.at(i, j) * gv[j];
            gx[i * d + j] += inv_std[j] / nn * (nn * dxh - sum_dxhat - xhat.at(i, j) * sum_dxhat_xhat);
          }
        }
      });
  return {y, std::move(mean), std::move(var)};
}

Var batch_norm_inference(Var x, const Tensor& mean, const Tensor& var, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("batch_norm_inference: needs [N x D]");
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  if (mean.shape() != Shape{d} || var.shape() != Shape{d} || gamma.value().shape() != Shape{d} ||
      beta.value().shape() != Shape{d}) {
    throw ShapeError("batch_norm_inference: statistics must be [" + std::to_string(d) + "]");
  }
  Tensor inv_std({d});
  for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
  Tensor xhat({n, d});
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      xhat.at(i, j) = (xv.at(i, j) - mean[j]) * inv_std[j];
      out.at(i, j) = gamma.value()[j] * xhat.at(i, j) + beta.value()[j];
    }
  }
  return tape_of(x).record("batch_norm_inference", std::move(out), {x, gamma, beta},
                           [x, gamma, beta, xhat = std::move(xhat), inv_std, n, d](Tape& t, const Tensor& g) {
                             const Tensor& gv = gamma.value();
                             for (std::size_t i = 0; i < n; ++i) {
                               for (std::size_t j = 0; j < d; ++j) {
                                 if (t.requires_grad(gamma)) t.grad(gamma)[j] += g.at(i, j) * xhat.at(i, j);
                                 if (t.requires_grad(beta)) t.grad(beta)[j] += g.at(i, j);
                                 if (t.requires_grad(x)) t.grad(x)[i * d + j] += g.at(i, j) * gv[j] * inv_std[j];
                               }
                             }
                           });
}

}  // namespace topicpara
