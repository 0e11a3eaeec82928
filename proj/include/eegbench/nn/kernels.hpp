#pragma once

// Batched forward/backward kernels for the layer types used by the model zoo.
//
// Sequence tensors are [batch x time x channels], row-major. Dense inputs are
// [batch x features]. The graph ops in ops.hpp wrap these kernels.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/activation.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::nn::kernels {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using StridedConstMatMap = Eigen::Map<const RowMat, Eigen::Unaligned, Eigen::OuterStride<>>;
using ArrMap = Eigen::Map<Eigen::ArrayXd>;

inline std::size_t pooled_length(std::size_t time, std::size_t window, std::size_t stride) {
  return (time - window) / stride + 1;
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities, vectorized through Eigen's packet exp.

inline void sigmoid_inplace(double* p, std::size_t n) {
  ArrMap a(p, static_cast<Eigen::Index>(n));
  a = 1.0 / (1.0 + (-a).exp());
}

inline void tanh_inplace(double* p, std::size_t n) {
  ArrMap a(p, static_cast<Eigen::Index>(n));
  a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

inline void activation_forward(Activation kind, const double* x, double* y, std::size_t n) {
  switch (kind) {
    case Activation::linear:
      std::copy(x, x + n, y);
      return;
    case Activation::sigmoid:
      std::copy(x, x + n, y);
      sigmoid_inplace(y, n);
      return;
    default:
      for (std::size_t i = 0; i < n; ++i) y[i] = activate(kind, x[i]);
  }
}

inline void activation_backward(Activation kind, const double* x, const double* y,
                                const double* dy, double* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * activate_derivative(kind, x[i], y[i]);
}

// ---------------------------------------------------------------------------
// conv1d: out[b,t,o] = bias[o] + sum_{j,c} in[b, t*stride + j, c] * w[o,j,c]

struct ConvDims {
  std::size_t batch, time, in_ch, out_ch, kernel, stride, out_time;
};

inline ConvDims conv1d_dims(const Shape& in, const Shape& w, const Shape& bias,
                            std::size_t stride) {
  if (in.size() != 3) throw DimensionError("conv1d: input must be [batch x time x channels]");
  if (w.size() != 3) throw DimensionError("conv1d: kernels must be [out_ch x kernel x in_ch]");
  if (stride == 0) throw ParameterError("conv1d: stride must be >= 1");
  if (w[2] != in[2]) {
    throw DimensionError("conv1d: channel axis mismatch, input has " + std::to_string(in[2]) +
                         " channels but kernels expect " + std::to_string(w[2]));
  }
  if (bias.size() != 1 || bias[0] != w[0]) {
    throw DimensionError("conv1d: bias axis must have " + std::to_string(w[0]) + " entries");
  }
  if (w[1] == 0) throw ParameterError("conv1d: kernel size must be >= 1");
  if (in[1] < w[1]) {
    throw DimensionError("conv1d: time axis (" + std::to_string(in[1]) +
                         ") shorter than kernel (" + std::to_string(w[1]) + ")");
  }
  return {in[0], in[1], in[2], w[0], w[1], stride, pooled_length(in[1], w[1], stride)};
}

inline Tensor conv1d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                             std::size_t stride) {
  const ConvDims d = conv1d_dims(in.shape(), w.shape(), bias.shape(), stride);
  Tensor out({d.batch, d.out_time, d.out_ch});
  const auto kc = static_cast<Eigen::Index>(d.kernel * d.in_ch);
  ConstMatMap kmat(w.data(), static_cast<Eigen::Index>(d.out_ch), kc);
  Eigen::Map<const Eigen::RowVectorXd> b(bias.data(), static_cast<Eigen::Index>(d.out_ch));
  for (std::size_t n = 0; n < d.batch; ++n) {
    // Windows of a row-major [time x ch] signal are overlapping contiguous rows.
    StridedConstMatMap windows(in.data() + n * d.time * d.in_ch,
                               static_cast<Eigen::Index>(d.out_time), kc,
                               Eigen::OuterStride<>(static_cast<Eigen::Index>(d.stride * d.in_ch)));
    MatMap o(out.data() + n * d.out_time * d.out_ch, static_cast<Eigen::Index>(d.out_time),
             static_cast<Eigen::Index>(d.out_ch));
    o.noalias() = windows * kmat.transpose();
    o.rowwise() += b;
  }
  return out;
}

// Accumulates into dx, dw, db (any of which may be null).
inline void conv1d_backward(const Tensor& in, const Tensor& w, std::size_t stride,
                            const Tensor& dout, Tensor* dx, Tensor* dw, Tensor* db) {
  const ConvDims d = conv1d_dims(in.shape(), w.shape(), Shape{w.dim(0)}, stride);
  const auto kc = static_cast<Eigen::Index>(d.kernel * d.in_ch);
  const auto ot = static_cast<Eigen::Index>(d.out_time);
  const auto oc = static_cast<Eigen::Index>(d.out_ch);
  ConstMatMap kmat(w.data(), oc, kc);
  RowMat tmp;
  for (std::size_t n = 0; n < d.batch; ++n) {
    ConstMatMap g(dout.data() + n * d.out_time * d.out_ch, ot, oc);
    if (dw) {
      StridedConstMatMap windows(in.data() + n * d.time * d.in_ch, ot, kc,
                                 Eigen::OuterStride<>(static_cast<Eigen::Index>(d.stride * d.in_ch)));
      MatMap(dw->data(), oc, kc).noalias() += g.transpose() * windows;
    }
    if (db) {
      Eigen::Map<Eigen::RowVectorXd>(db->data(), oc) += g.colwise().sum();
    }
    if (dx) {
      tmp.noalias() = g * kmat;
      double* base = dx->data() + n * d.time * d.in_ch;
      for (std::size_t t = 0; t < d.out_time; ++t) {
        double* dst = base + t * d.stride * d.in_ch;
        const double* src = tmp.data() + t * static_cast<std::size_t>(kc);
        for (Eigen::Index i = 0; i < kc; ++i) dst[i] += src[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// maxpool1d over the time axis, per channel.

inline Tensor maxpool1d_forward(const Tensor& in, std::size_t window, std::size_t stride,
                                std::vector<std::uint32_t>* argmax) {
  if (in.rank() != 3) throw DimensionError("maxpool1d: input must be [batch x time x channels]");
  if (window == 0 || stride == 0) throw ParameterError("maxpool1d: window and stride must be >= 1");
  const std::size_t batch = in.dim(0), time = in.dim(1), ch = in.dim(2);
  if (window > time) {
    throw DimensionError("maxpool1d: window (" + std::to_string(window) +
                         ") exceeds time axis (" + std::to_string(time) + ")");
  }
  const std::size_t ot = pooled_length(time, window, stride);
  Tensor out({batch, ot, ch});
  if (argmax) argmax->assign(out.size(), 0);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* x = in.data() + n * time * ch;
    double* y = out.data() + n * ot * ch;
    for (std::size_t t = 0; t < ot; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = t * stride;
        double v = x[best * ch + c];
        for (std::size_t j = 1; j < window; ++j) {
          const std::size_t r = t * stride + j;
          // Strict comparison keeps the first occurrence on ties.
          if (x[r * ch + c] > v) {
            v = x[r * ch + c];
            best = r;
          }
        }
        y[t * ch + c] = v;
        if (argmax) (*argmax)[(n * ot + t) * ch + c] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

inline void maxpool1d_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                               const Tensor& dout, Tensor& dx) {
  const std::size_t time = in_shape[1], ch = in_shape[2];
  const std::size_t ot = dout.dim(1);
  for (std::size_t n = 0; n < dout.dim(0); ++n) {
    for (std::size_t t = 0; t < ot; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t i = (n * ot + t) * ch + c;
        dx[(n * time + argmax[i]) * ch + c] += dout[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// dense: out[b,:] = W * in[b,:] + bias

inline Tensor dense_forward(const Tensor& in, const Tensor& w, const Tensor& bias) {
  if (in.rank() != 2) throw DimensionError("dense: input must be [batch x features]");
  if (w.rank() != 2) throw DimensionError("dense: weights must be [out x features]");
  if (w.dim(1) != in.dim(1)) {
    throw DimensionError("dense: feature axis mismatch, input has " + std::to_string(in.dim(1)) +
                         " features but weights have " + std::to_string(w.dim(1)) + " columns");
  }
  if (bias.rank() != 1 || bias.dim(0) != w.dim(0)) {
    throw DimensionError("dense: bias axis must have " + std::to_string(w.dim(0)) + " entries");
  }
  const auto b = static_cast<Eigen::Index>(in.dim(0));
  const auto f = static_cast<Eigen::Index>(in.dim(1));
  const auto o = static_cast<Eigen::Index>(w.dim(0));
  Tensor out({in.dim(0), w.dim(0)});
  MatMap y(out.data(), b, o);
  y.noalias() = ConstMatMap(in.data(), b, f) * ConstMatMap(w.data(), o, f).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), o);
  return out;
}

inline void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor* dx,
                           Tensor* dw, Tensor* db) {
  const auto b = static_cast<Eigen::Index>(in.dim(0));
  const auto f = static_cast<Eigen::Index>(in.dim(1));
  const auto o = static_cast<Eigen::Index>(w.dim(0));
  ConstMatMap g(dout.data(), b, o);
  if (dx) MatMap(dx->data(), b, f).noalias() += g * ConstMatMap(w.data(), o, f);
  if (dw) MatMap(dw->data(), o, f).noalias() += g.transpose() * ConstMatMap(in.data(), b, f);
  if (db) Eigen::Map<Eigen::RowVectorXd>(db->data(), o) += g.colwise().sum();
}

// ---------------------------------------------------------------------------
// LSTM with gate order (input, forget, cell, output):
//   a_t = W_x x_t + W_h h_{t-1} + b
//   i, f, o = sigmoid(a_i, a_f, a_o), g = tanh(a_g)
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t),  h_{-1} = c_{-1} = 0

struct LstmDims {
  std::size_t batch, time, features, units;
};

inline LstmDims lstm_dims(const Shape& in, const Shape& wx, const Shape& wh, const Shape& b) {
  if (in.size() != 3) throw DimensionError("lstm: input must be [batch x time x features]");
  if (in[1] == 0) throw ParameterError("lstm: empty sequence");
  if (wh.size() != 2 || wh[0] != 4 * wh[1]) {
    throw DimensionError("lstm: recurrent weights must be [4*units x units]");
  }
  const std::size_t units = wh[1];
  if (wx.size() != 2 || wx[0] != 4 * units) {
    throw DimensionError("lstm: input weights must be [4*units x features]");
  }
  if (wx[1] != in[2]) {
    throw DimensionError("lstm: feature axis mismatch, input has " + std::to_string(in[2]) +
                         " features but weights expect " + std::to_string(wx[1]));
  }
  if (b.size() != 1 || b[0] != 4 * units) throw DimensionError("lstm: bias axis must be 4*units");
  return {in[0], in[1], in[2], units};
}

// Time-major activations retained for backpropagation through time.
struct LstmCache {
  LstmDims dims{};
  Buffer x_tm;   // [time x batch x features]
  Buffer gates;  // [time x batch x 4*units], post-nonlinearity
  Buffer cell;   // [time x batch x units]
  Buffer cell_tanh;
  Buffer hidden;
};

inline Tensor lstm_forward(const Tensor& in, const Tensor& wx, const Tensor& wh,
                           const Tensor& bias, bool return_sequence, LstmCache* keep) {
  const LstmDims d = lstm_dims(in.shape(), wx.shape(), wh.shape(), bias.shape());
  const std::size_t B = d.batch, T = d.time, F = d.features, H = d.units, G = 4 * H;
  const auto eB = static_cast<Eigen::Index>(B), eF = static_cast<Eigen::Index>(F),
             eH = static_cast<Eigen::Index>(H), eG = static_cast<Eigen::Index>(G);

  LstmCache local;
  LstmCache& c = keep ? *keep : local;
  c.dims = d;
  c.x_tm.resize(T * B * F);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t t = 0; t < T; ++t)
      std::copy_n(in.data() + (n * T + t) * F, F, c.x_tm.data() + (t * B + n) * F);

  c.gates.resize(T * B * G);
  MatMap all_gates(c.gates.data(), static_cast<Eigen::Index>(T * B), eG);
  all_gates.noalias() = ConstMatMap(c.x_tm.data(), static_cast<Eigen::Index>(T * B), eF) *
                        ConstMatMap(wx.data(), eG, eF).transpose();
  all_gates.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), eG);

  c.cell.resize(T * B * H);
  c.cell_tanh.resize(T * B * H);
  c.hidden.resize(T * B * H);
  ConstMatMap wh_map(wh.data(), eG, eH);
  for (std::size_t t = 0; t < T; ++t) {
    double* a = c.gates.data() + t * B * G;
    MatMap a_map(a, eB, eG);
    if (t > 0) {
      a_map.noalias() += ConstMatMap(c.hidden.data() + (t - 1) * B * H, eB, eH) * wh_map.transpose();
    }
    for (std::size_t n = 0; n < B; ++n) {
      double* row = a + n * G;
      sigmoid_inplace(row, 2 * H);
      tanh_inplace(row + 2 * H, H);
      sigmoid_inplace(row + 3 * H, H);
    }
    double* ct = c.cell.data() + t * B * H;
    const double* cprev = t > 0 ? c.cell.data() + (t - 1) * B * H : nullptr;
    for (std::size_t n = 0; n < B; ++n) {
      const double* row = a + n * G;
      for (std::size_t u = 0; u < H; ++u) {
        const double prev = cprev ? cprev[n * H + u] : 0.0;
        ct[n * H + u] = row[H + u] * prev + row[u] * row[2 * H + u];
      }
    }
    double* tc = c.cell_tanh.data() + t * B * H;
    std::copy_n(ct, B * H, tc);
    tanh_inplace(tc, B * H);
    double* ht = c.hidden.data() + t * B * H;
    for (std::size_t n = 0; n < B; ++n)
      for (std::size_t u = 0; u < H; ++u) ht[n * H + u] = a[n * G + 3 * H + u] * tc[n * H + u];
  }

  if (return_sequence) {
    Tensor out({B, T, H});
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < B; ++n)
        std::copy_n(c.hidden.data() + (t * B + n) * H, H, out.data() + (n * T + t) * H);
    return out;
  }
  Tensor out({B, H});
  std::copy_n(c.hidden.data() + (T - 1) * B * H, B * H, out.data());
  return out;
}

// Consumes the cache: gate activations are overwritten by pre-activation grads.
inline void lstm_backward(LstmCache& c, const Tensor& wx, const Tensor& wh, bool return_sequence,
                          const Tensor& dout, Tensor* dx, Tensor* dwx, Tensor* dwh, Tensor* db) {
  const LstmDims d = c.dims;
  const std::size_t B = d.batch, T = d.time, F = d.features, H = d.units, G = 4 * H;
  const auto eB = static_cast<Eigen::Index>(B), eF = static_cast<Eigen::Index>(F),
             eH = static_cast<Eigen::Index>(H), eG = static_cast<Eigen::Index>(G);
  ConstMatMap wh_map(wh.data(), eG, eH);

  Buffer dh(B * H), dh_next(B * H, 0.0), dc_next(B * H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t u = 0; u < H; ++u) {
        double g = dh_next[n * H + u];
        if (return_sequence) {
          g += dout[(n * T + t) * H + u];
        } else if (t == T - 1) {
          g += dout[n * H + u];
        }
        dh[n * H + u] = g;
      }
    }
    double* a = c.gates.data() + t * B * G;
    const double* tc = c.cell_tanh.data() + t * B * H;
    const double* cprev = t > 0 ? c.cell.data() + (t - 1) * B * H : nullptr;
    for (std::size_t n = 0; n < B; ++n) {
      double* row = a + n * G;
      for (std::size_t u = 0; u < H; ++u) {
        const std::size_t k = n * H + u;
        const double i = row[u], f = row[H + u], g = row[2 * H + u], o = row[3 * H + u];
        const double dct = dh[k] * o * (1.0 - tc[k] * tc[k]) + dc_next[k];
        const double dot = dh[k] * tc[k];
        const double prev = cprev ? cprev[k] : 0.0;
        dc_next[k] = dct * f;
        row[u] = dct * g * i * (1.0 - i);
        row[H + u] = dct * prev * f * (1.0 - f);
        row[2 * H + u] = dct * i * (1.0 - g * g);
        row[3 * H + u] = dot * o * (1.0 - o);
      }
    }
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dhn(
        dh_next.data(), eB, eH);
    dhn.noalias() = ConstMatMap(a, eB, eG) * wh_map;
  }

  const auto rows = static_cast<Eigen::Index>(T * B);
  ConstMatMap da(c.gates.data(), rows, eG);
  if (dwx) {
    MatMap(dwx->data(), eG, eF).noalias() +=
        da.transpose() * ConstMatMap(c.x_tm.data(), rows, eF);
  }
  if (dwh && T > 1) {
    const auto r = static_cast<Eigen::Index>((T - 1) * B);
    MatMap(dwh->data(), eG, eH).noalias() +=
        ConstMatMap(c.gates.data() + B * G, r, eG).transpose() * ConstMatMap(c.hidden.data(), r, eH);
  }
  if (db) Eigen::Map<Eigen::RowVectorXd>(db->data(), eG) += da.colwise().sum();
  if (dx) {
    RowMat dx_tm = da * ConstMatMap(wx.data(), eG, eF);
    for (std::size_t n = 0; n < B; ++n)
      for (std::size_t t = 0; t < T; ++t) {
        double* dst = dx->data() + (n * T + t) * F;
        const double* src = dx_tm.data() + (t * B + n) * F;
        for (std::size_t k = 0; k < F; ++k) dst[k] += src[k];
      }
  }
}

}  // namespace eegbench::nn::kernels
