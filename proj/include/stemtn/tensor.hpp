#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stemtn/errors.hpp"

namespace stemtn {

using cx = std::complex<double>;

// Dense tensor of complex doubles in row-major order. Rank 0 is a scalar
// (data has exactly one entry). Bond dimensions are arbitrary positive
// integers even though circuit networks only ever use 2.
struct Tensor {
  std::vector<int> dims;
  std::vector<cx> data;

  Tensor() : data(1, cx(0.0, 0.0)) {}

  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(element_count(dims), cx(0.0, 0.0));
  }

  Tensor(std::vector<int> d, std::vector<cx> values) : dims(std::move(d)), data(std::move(values)) {
    require(data.size() == element_count(dims), ErrorKind::MalformedNetwork,
            "tensor data length does not match the product of its dims");
  }

  static Tensor scalar(cx v) {
    Tensor t;
    t.data[0] = v;
    return t;
  }

  static std::size_t element_count(const std::vector<int> &dims) {
    std::size_t n = 1;
    for (int d : dims) {
      require(d > 0, ErrorKind::MalformedNetwork, "bond dimension must be positive");
      n *= std::size_t(d);
    }
    return n;
  }

  int rank() const { return int(dims.size()); }
  std::size_t size() const { return data.size(); }

  // Row-major strides; stride of the last axis is 1.
  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(dims.size(), 1);
    for (int i = int(dims.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * std::size_t(dims[i + 1]);
    return s;
  }

  std::size_t flat_index(const std::vector<int> &idx) const {
    require(idx.size() == dims.size(), ErrorKind::IndexOutOfRange, "index arity mismatch");
    std::size_t f = 0, stride = 1;
    for (int i = int(dims.size()) - 1; i >= 0; --i) {
      require(idx[i] >= 0 && idx[i] < dims[i], ErrorKind::IndexOutOfRange,
              "tensor index out of range on axis " + std::to_string(i));
      f += std::size_t(idx[i]) * stride;
      stride *= std::size_t(dims[i]);
    }
    return f;
  }

  cx at(const std::vector<int> &idx) const { return data[flat_index(idx)]; }
  cx &at(const std::vector<int> &idx) { return data[flat_index(idx)]; }
};

// Permutes axes: result axis i is input axis perm[i].
inline Tensor permute_axes(const Tensor &t, const std::vector<int> &perm) {
  require(perm.size() == t.dims.size(), ErrorKind::MalformedNetwork, "permutation arity mismatch");
  int r = t.rank();
  if (r <= 1) return t;
  std::vector<int> out_dims(r);
  for (int i = 0; i < r; ++i) out_dims[i] = t.dims[perm[i]];
  Tensor out(out_dims);
  std::vector<std::size_t> in_strides = t.strides();
  // stride to add in the input when output axis i increments
  std::vector<std::size_t> step(r);
  for (int i = 0; i < r; ++i) step[i] = in_strides[perm[i]];
  std::vector<int> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
    out.data[flat] = t.data[src];
    for (int ax = r - 1; ax >= 0; --ax) {
      idx[ax]++;
      src += step[ax];
      if (idx[ax] < out_dims[ax]) break;
      src -= std::size_t(out_dims[ax]) * step[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

// Fixes axis `axis` to `index`, dropping that axis.
inline Tensor restrict_axis(const Tensor &t, int axis, int index) {
  require(axis >= 0 && axis < t.rank(), ErrorKind::IndexOutOfRange, "axis out of range");
  require(index >= 0 && index < t.dims[axis], ErrorKind::IndexOutOfRange,
          "slice index out of range");
  std::vector<int> out_dims = t.dims;
  out_dims.erase(out_dims.begin() + axis);
  Tensor out(out_dims);
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= std::size_t(t.dims[i]);
  for (int i = axis + 1; i < t.rank(); ++i) inner *= std::size_t(t.dims[i]);
  std::size_t ax = std::size_t(t.dims[axis]);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in)
      out.data[o * inner + in] = t.data[(o * ax + std::size_t(index)) * inner + in];
  return out;
}

inline double max_abs(const Tensor &t) {
  double m = 0.0;
  for (const cx &v : t.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace stemtn
