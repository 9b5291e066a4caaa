#include "daqa/nn/params.hpp"

#include "daqa/common/error.hpp"

namespace daqa::nn {

template <class T>
Var<T> ParamSet<T>::add(std::string name, Tensor<T> init) {
  if (find(name)) throw SchemaError("duplicate parameter name " + name);
  auto v = parameter(std::move(init));
  params_.emplace_back(std::move(name), v);
  return v;
}

template <class T>
BatchNormBuffers<T>& ParamSet<T>::add_batchnorm(std::string name, int channels) {
  bn_.emplace_back(std::move(name), BatchNormBuffers<T>(channels));
  return bn_.back().second;
}

template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> ParamSet<T>::buffers() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (auto& [name, b] : bn_) {
    out.emplace_back(name + ".running_mean", &b.running_mean);
    out.emplace_back(name + ".running_var", &b.running_var);
  }
  return out;
}

template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> ParamSet<T>::buffers() const {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (const auto& [name, b] : bn_) {
    out.emplace_back(name + ".running_mean", &b.running_mean);
    out.emplace_back(name + ".running_var", &b.running_var);
  }
  return out;
}

template <class T>
Var<T> ParamSet<T>::find(const std::string& name) const {
  for (const auto& [n, v] : params_)
    if (n == name) return v;
  return nullptr;
}

template <class T>
std::size_t ParamSet<T>::count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.second->value.numel();
  return total;
}

template <class T>
void ParamSet<T>::zero_grad() {
  for (auto& p : params_) p.second->grad = Tensor<T>();
}

template class ParamSet<float>;
template class ParamSet<double>;

}  // namespace daqa::nn
