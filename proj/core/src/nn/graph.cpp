#include "mb2d/nn/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "mb2d/errors.hpp"

namespace mb2d::nn {

std::string Shape::str() const {
  std::ostringstream os;
  os << "[c=" << c << " n=" << n << " h=" << h << " w=" << w << "]";
  return os.str();
}

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using MatMap = Eigen::Map<RowMat<T>>;

template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Unfolds 3x3 neighbourhoods into rows [cin*9][n*ho*wo].
template <class T>
void im2col(const Tensor<T>& x, int stride, int ho, int wo, std::vector<T>& cols) {
  const Shape& s = x.shape();
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t row_len = out_plane * s.n;
  cols.assign(static_cast<std::size_t>(s.c) * 9 * row_len, T(0));
  for (int ci = 0; ci < s.c; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = cols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * row_len;
        // Valid output columns for this tap: 0 <= ox*stride + kx - 1 < w.
        const int ox_begin = std::max(0, (1 - kx + stride - 1) / stride);
        const int ox_end = std::min(wo, (s.w - kx + 1 + stride - 1) / stride);
        for (int n = 0; n < s.n; ++n) {
          const T* src = x.plane(ci, n);
          T* dst_plane = row + n * out_plane;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= s.h) continue;
            const T* src_row = src + static_cast<std::size_t>(iy) * s.w;
            T* dst = dst_plane + static_cast<std::size_t>(oy) * wo;
            if (stride == 1) {
              if (ox_end > ox_begin)
                std::memcpy(dst + ox_begin, src_row + ox_begin + kx - 1,
                            sizeof(T) * static_cast<std::size_t>(ox_end - ox_begin));
            } else {
              for (int ox = ox_begin; ox < ox_end; ++ox) dst[ox] = src_row[ox * stride + kx - 1];
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const RowMat<T>& cols, int stride, int ho, int wo, Tensor<T>& dx) {
  const Shape& s = dx.shape();
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t row_len = out_plane * s.n;
  for (int ci = 0; ci < s.c; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = cols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * row_len;
        const int ox_begin = std::max(0, (1 - kx + stride - 1) / stride);
        const int ox_end = std::min(wo, (s.w - kx + 1 + stride - 1) / stride);
        for (int n = 0; n < s.n; ++n) {
          T* dst = dx.plane(ci, n);
          const T* src_plane = row + n * out_plane;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= s.h) continue;
            T* dst_row = dst + static_cast<std::size_t>(iy) * s.w;
            const T* src = src_plane + static_cast<std::size_t>(oy) * wo;
            for (int ox = ox_begin; ox < ox_end; ++ox) dst_row[ox * stride + kx - 1] += src[ox];
          }
        }
      }
    }
  }
}

// Per-axis interpolation taps for half-pixel bilinear resampling.
struct AxisTaps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> frac;
};

AxisTaps make_taps(int in, int out) {
  AxisTaps taps;
  taps.lo.resize(out);
  taps.hi.resize(out);
  taps.frac.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    taps.lo[i] = lo;
    taps.hi[i] = std::min(lo + 1, in - 1);
    taps.frac[i] = src - lo;
  }
  return taps;
}

}  // namespace

template <class T>
Var<T> Graph<T>::constant(Tensor<T> value) const {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return node;
}

template <class T>
Var<T> Graph<T>::emit(Tensor<T> value, std::initializer_list<const Var<T>*> parents,
                      std::function<void(Node<T>&)> fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (!record_) return node;
  bool needs = false;
  for (const Var<T>* p : parents) needs = needs || (*p)->requires_grad;
  if (!needs) return node;
  node->requires_grad = true;
  node->backward_fn = std::move(fn);
  tape_.push_back(node);
  return node;
}

template <class T>
Var<T> Graph<T>::conv3x3(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride) {
  const Shape& xs = x->value.shape();
  const int cout = weight->value.shape().c;
  if (weight->value.shape().w != xs.c * 9)
    throw ValidationError("conv3x3: weight expects " + std::to_string(weight->value.shape().w / 9) +
                          " input channels, got " + std::to_string(xs.c));
  const int ho = conv_out_extent(xs.h, stride);
  const int wo = conv_out_extent(xs.w, stride);
  const Shape os{cout, xs.n, ho, wo};
  const Eigen::Index k = static_cast<Eigen::Index>(xs.c) * 9;
  const Eigen::Index cols_n = static_cast<Eigen::Index>(xs.n) * ho * wo;

  auto cols = std::make_shared<std::vector<T>>();
  im2col(x->value, stride, ho, wo, *cols);

  Tensor<T> out(os);
  {
    ConstMatMap<T> wm(weight->value.data(), cout, k);
    ConstMatMap<T> cm(cols->data(), k, cols_n);
    MatMap<T> om(out.data(), cout, cols_n);
    om.noalias() = wm * cm;
    for (int c = 0; c < cout; ++c) om.row(c).array() += bias->value.data()[c];
  }

  return emit(std::move(out), {&x, &weight, &bias},
              [x, weight, bias, cols, stride, ho, wo, k, cols_n, cout](Node<T>& self) {
                ConstMatMap<T> go(self.grad.data(), cout, cols_n);
                ConstMatMap<T> cm(cols->data(), k, cols_n);
                if (weight->requires_grad) {
                  MatMap<T> gw(weight->ensure_grad().data(), cout, k);
                  gw.noalias() += go * cm.transpose();
                }
                if (bias->requires_grad) {
                  // Plain loop: Eigen's vectorised sum depends on buffer alignment.
                  T* gb = bias->ensure_grad().data();
                  const T* g = self.grad.data();
                  for (int c = 0; c < cout; ++c) {
                    T acc = 0;
                    for (std::int64_t i = 0; i < cols_n; ++i) acc += g[c * cols_n + i];
                    gb[c] += acc;
                  }
                }
                if (x->requires_grad) {
                  ConstMatMap<T> wm(weight->value.data(), cout, k);
                  RowMat<T> gcols = wm.transpose() * go;
                  col2im_add(gcols, stride, ho, wo, x->ensure_grad());
                }
              });
}

template <class T>
Var<T> Graph<T>::leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> out(x->value.shape());
  const T* src = x->value.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : slope * src[i];
  return emit(std::move(out), {&x}, [x, slope](Node<T>& self) {
    T* g = x->ensure_grad().data();
    const T* v = x->value.data();
    const T* go = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += v[i] > T(0) ? go[i] : slope * go[i];
  });
}

template <class T>
Var<T> Graph<T>::resize(const Var<T>& x, int height, int width) {
  const Shape& xs = x->value.shape();
  if (height <= 0 || width <= 0) throw ValidationError("resize: target extent must be positive");
  if (xs.h == height && xs.w == width) return x;
  auto ty = std::make_shared<AxisTaps>(make_taps(xs.h, height));
  auto tx = std::make_shared<AxisTaps>(make_taps(xs.w, width));
  const Shape os{xs.c, xs.n, height, width};
  Tensor<T> out(os);
  for (int c = 0; c < xs.c; ++c) {
    for (int n = 0; n < xs.n; ++n) {
      const T* src = x->value.plane(c, n);
      T* dst = out.plane(c, n);
      for (int y = 0; y < height; ++y) {
        const T fy = static_cast<T>(ty->frac[y]);
        const T* r0 = src + static_cast<std::size_t>(ty->lo[y]) * xs.w;
        const T* r1 = src + static_cast<std::size_t>(ty->hi[y]) * xs.w;
        for (int xx = 0; xx < width; ++xx) {
          const T fx = static_cast<T>(tx->frac[xx]);
          const int x0 = tx->lo[xx];
          const int x1 = tx->hi[xx];
          const T top = r0[x0] + fx * (r0[x1] - r0[x0]);
          const T bot = r1[x0] + fx * (r1[x1] - r1[x0]);
          dst[static_cast<std::size_t>(y) * width + xx] = top + fy * (bot - top);
        }
      }
    }
  }
  return emit(std::move(out), {&x}, [x, ty, tx, height, width](Node<T>& self) {
    Tensor<T>& g = x->ensure_grad();
    const Shape& xs = x->value.shape();
    for (int c = 0; c < xs.c; ++c) {
      for (int n = 0; n < xs.n; ++n) {
        const T* go = self.grad.plane(c, n);
        T* gi = g.plane(c, n);
        for (int y = 0; y < height; ++y) {
          const T fy = static_cast<T>(ty->frac[y]);
          T* r0 = gi + static_cast<std::size_t>(ty->lo[y]) * xs.w;
          T* r1 = gi + static_cast<std::size_t>(ty->hi[y]) * xs.w;
          for (int xx = 0; xx < width; ++xx) {
            const T fx = static_cast<T>(tx->frac[xx]);
            const T v = go[static_cast<std::size_t>(y) * width + xx];
            const T top = v * (T(1) - fy);
            const T bot = v * fy;
            r0[tx->lo[xx]] += top * (T(1) - fx);
            r0[tx->hi[xx]] += top * fx;
            r1[tx->lo[xx]] += bot * (T(1) - fx);
            r1[tx->hi[xx]] += bot * fx;
          }
        }
      }
    }
  });
}

template <class T>
Var<T> Graph<T>::concat(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ValidationError("concat: no inputs");
  Shape os = parts.front()->value.shape();
  os.c = 0;
  for (const auto& p : parts) {
    if (!p->value.shape().same_spatial(os))
      throw ValidationError("concat: spatial mismatch " + p->value.shape().str() + " vs " + os.str());
    os.c += p->value.shape().c;
  }
  Tensor<T> out(os);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + offset);
    offset += p->value.size();
  }
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(out);
  if (!record_) return node;
  auto saved = std::make_shared<std::vector<Var<T>>>(parts.begin(), parts.end());
  bool needs = false;
  for (const auto& p : parts) needs = needs || p->requires_grad;
  if (!needs) return node;
  node->requires_grad = true;
  node->backward_fn = [saved](Node<T>& self) {
    std::size_t off = 0;
    for (const auto& p : *saved) {
      const std::size_t len = p->value.size();
      if (p->requires_grad) {
        T* g = p->ensure_grad().data();
        const T* go = self.grad.data() + off;
        for (std::size_t i = 0; i < len; ++i) g[i] += go[i];
      }
      off += len;
    }
  };
  tape_.push_back(node);
  return node;
}

template <class T>
Var<T> Graph<T>::add(const Var<T>& a, const Var<T>& b) {
  if (a->value.shape() != b->value.shape())
    throw ValidationError("add: shape mismatch " + a->value.shape().str() + " vs " +
                          b->value.shape().str());
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a->value.data()[i] + b->value.data()[i];
  return emit(std::move(out), {&a, &b}, [a, b](Node<T>& self) {
    for (const Var<T>* p : {&a, &b}) {
      if (!(*p)->requires_grad) continue;
      T* g = (*p)->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad.data()[i];
    }
  });
}

template <class T>
Var<T> Graph<T>::clamp01(const Var<T>& x) {
  Tensor<T> out(x->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(x->value.data()[i], T(0), T(1));
  return emit(std::move(out), {&x}, [x](Node<T>& self) {
    T* g = x->ensure_grad().data();
    const T* v = x->value.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (v[i] >= T(0) && v[i] <= T(1)) g[i] += self.grad.data()[i];
  });
}

template <class T>
Var<T> Graph<T>::l1_mean(const Var<T>& a, const Var<T>& b) {
  if (a->value.shape() != b->value.shape())
    throw ValidationError("l1: shape mismatch " + a->value.shape().str() + " vs " +
                          b->value.shape().str());
  const std::size_t count = a->value.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    acc += std::abs(static_cast<double>(a->value.data()[i]) - static_cast<double>(b->value.data()[i]));
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  return emit(std::move(out), {&a, &b}, [a, b, count](Node<T>& self) {
    const T scale = self.grad.data()[0] / static_cast<T>(count);
    const T* va = a->value.data();
    const T* vb = b->value.data();
    auto sign = [](T d) { return d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)); };
    if (a->requires_grad) {
      T* g = a->ensure_grad().data();
      for (std::size_t i = 0; i < count; ++i) g[i] += scale * sign(va[i] - vb[i]);
    }
    if (b->requires_grad) {
      T* g = b->ensure_grad().data();
      for (std::size_t i = 0; i < count; ++i) g[i] -= scale * sign(va[i] - vb[i]);
    }
  });
}

template <class T>
Var<T> Graph<T>::sum(std::span<const Var<T>> scalars) {
  if (scalars.empty()) throw ValidationError("sum: no inputs");
  T total = T(0);
  for (const auto& s : scalars) {
    if (s->value.size() != 1) throw ValidationError("sum: expects scalar nodes");
    total += s->value.data()[0];
  }
  Tensor<T> out(Shape{1, 1, 1, 1}, total);
  auto saved = std::make_shared<std::vector<Var<T>>>(scalars.begin(), scalars.end());
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(out);
  if (!record_) return node;
  bool needs = false;
  for (const auto& s : scalars) needs = needs || s->requires_grad;
  if (!needs) return node;
  node->requires_grad = true;
  node->backward_fn = [saved](Node<T>& self) {
    for (const auto& s : *saved)
      if (s->requires_grad) s->ensure_grad().data()[0] += self.grad.data()[0];
  };
  tape_.push_back(node);
  return node;
}

template <class T>
void Graph<T>::backward(const Var<T>& loss) {
  if (!record_) throw ValidationError("backward: graph was built without recording");
  if (loss->value.size() != 1) throw ValidationError("backward: loss must be a scalar");
  if (!loss->requires_grad) return;
  loss->ensure_grad().data()[0] += T(1);
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node<T>& node = **it;
    if (node.grad.empty() || !node.backward_fn) continue;
    node.backward_fn(node);
  }
  // Release intermediates so a finished graph does not pin activations.
  for (auto& node : tape_) node->backward_fn = nullptr;
  tape_.clear();
}

template class Graph<float>;
template class Graph<double>;

}  // namespace mb2d::nn
