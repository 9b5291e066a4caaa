#include "daqa/nn/tensor.hpp"

#include "daqa/common/error.hpp"

namespace daqa::nn {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size())
    throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape s) const {
  if (shape_numel(s) != numel()) throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(s));
  return Tensor<T>(std::move(s), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace daqa::nn
