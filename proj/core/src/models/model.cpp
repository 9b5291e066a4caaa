#include "daqa/models/model.hpp"

#include <algorithm>

#include "daqa/common/error.hpp"

namespace daqa::models {

using namespace nn;

namespace {

constexpr Conv2dSpec kSame3x3{1, 1, 1, 1};
constexpr Conv2dSpec kPointwise{1, 1, 0, 0};
// First stem conv: 3 (frequency) x 12 (time), stride 1 x 9.
constexpr int kFirstKh = 3, kFirstKw = 12;
constexpr Conv2dSpec kFirstSpec{1, 9, 1, 0};

}  // namespace

template <class T>
Model<T> Model<T>::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config_ = config;
  Rng rng(seed);
  auto& ps = m.params_;
  const bool fcn = config.kind == ModelKind::FCN;

  int in = 1;
  for (int b = 0; b < config.stem_blocks; ++b) {
    const int f = config.stem_filters(b);
    StemBlock blk;
    const int n_convs = fcn && b == config.stem_blocks - 1 ? 3 : 2;
    for (int k = 0; k < n_convs; ++k) {
      const std::string name = "stem" + std::to_string(b) + ".conv" + std::to_string(k);
      if (b == 0 && k == 0)
        blk.convs.push_back(Conv2d<T>::make(ps, name, in, f, kFirstKh, kFirstKw, kFirstSpec, rng));
      else
        blk.convs.push_back(Conv2d<T>::make(ps, name, k == 0 ? in : f, f, 3, 3, kSame3x3, rng));
      blk.bns.push_back(BatchNorm<T>::make(ps, "stem" + std::to_string(b) + ".bn" + std::to_string(k), f, true));
    }
    m.stem_.push_back(std::move(blk));
    in = f;
  }

  if (fcn) {
    const int top = config.scaled(config.fcn_top_channels);
    m.fcn_top_ = Conv2d<T>::make(ps, "head.conv", in, top, 1, 1, kPointwise, rng);
    m.fcn_top_bn_ = BatchNorm<T>::make(ps, "head.bn", top, true);
    m.fcn_out_ = Conv2d<T>::make(ps, "head.out", top, config.classes, 1, 1, kPointwise, rng);
    return m;
  }

  const int C = config.scaled(config.block_channels);
  if (in != C)
    throw SchemaError("stem output has " + std::to_string(in) + " channels but modulated blocks expect " + std::to_string(C));
  const int hidden = config.scaled(config.controller_hidden);
  const int embed = config.scaled(config.embed_dim);
  const int units = config.modulated_units;
  const bool malimo = config.kind == ModelKind::MALiMo;

  m.embedding_ = ps.add("question.embedding", standard_normal_tensor<T>({config.vocab_size, embed}, rng));
  m.question_.lstm = Lstm<T>::make(ps, "question.lstm", embed, hidden, config.controller_layers, rng);
  m.question_.out = Linear<T>::make(ps, "question.film", hidden, 2 * C * units, rng);
  if (malimo) {
    int h = config.n_mels;
    for (int b = 0; b < config.stem_blocks; ++b) h /= 2;
    const int pooled_h = h / std::min(config.audio_pool, std::max(h, 1));
    m.audio_.lstm = Lstm<T>::make(ps, "audio.lstm", C * std::max(pooled_h, 1), hidden, config.controller_layers, rng);
    m.audio_.out = Linear<T>::make(ps, "audio.film", hidden, 2 * C * units, rng);
  }
  const int n_blocks = malimo ? 2 * units : units;
  for (int k = 0; k < n_blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    ResBlock rb;
    rb.conv1 = Conv2d<T>::make(ps, p + ".conv1", C + 2, C, 3, 3, kSame3x3, rng);
    rb.conv2 = Conv2d<T>::make(ps, p + ".conv2", C, C, 3, 3, kSame3x3, rng);
    rb.bn = BatchNorm<T>::make(ps, p + ".bn", C, false);
    m.blocks_.push_back(std::move(rb));
  }
  const int head = config.scaled(config.head_channels);
  const int head_hidden = config.scaled(config.head_hidden);
  m.head_conv_ = Conv2d<T>::make(ps, "head.conv", C, head, 1, 1, kPointwise, rng);
  m.head_bn_ = BatchNorm<T>::make(ps, "head.bn", head, true);
  m.head_hidden_ = Linear<T>::make(ps, "head.hidden", head, head_hidden, rng);
  m.head_out_ = Linear<T>::make(ps, "head.out", head_hidden, config.classes, rng);
  return m;
}

template <class T>
int Model<T>::stem_width(int frames) const {
  int w = frames < kFirstKw ? 0 : conv_out(frames, kFirstKw, kFirstSpec.stride_w, kFirstSpec.pad_w);
  for (int b = 0; b < config_.stem_blocks; ++b) w /= 2;
  return w;
}

template <class T>
int Model<T>::min_frames() const {
  int f = kFirstKw;
  while (stem_width(f) < 1) f += kFirstSpec.stride_w;
  return f;
}

template <class T>
int Model<T>::audio_sequence_length(int w) const {
  const int kw = std::min(config_.audio_pool, w);
  return kw < 1 ? 0 : conv_out(w, kw, kw, 0);
}

template <class T>
Var<T> Model<T>::run_stem(Var<T> x, bool training) const {
  for (const auto& blk : stem_) {
    for (std::size_t k = 0; k < blk.convs.size(); ++k) x = relu(blk.bns[k](blk.convs[k](x), training));
    x = maxpool2d(x, 2, 2);
  }
  return x;
}

template <class T>
Var<T> Model<T>::res_block(const ResBlock& b, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                           bool training, bool modulate) const {
  const auto& s = x->value.shape();
  auto with_coords = concat_channels(x, constant(coord_maps<T>(s[0], s[2], s[3])));
  auto r1 = relu(b.conv1(with_coords));
  auto y = b.bn(b.conv2(r1), training);
  if (modulate) y = film(y, gamma, beta);
  return add(relu(y), r1);
}

template <class T>
Var<T> Model<T>::controller_output(const Controller& c, Var<T> seq, const std::vector<int>& lengths) const {
  return c.out(last_step(c.lstm(std::move(seq), lengths), lengths));
}

template <class T>
ForwardResult<T> Model<T>::forward(const ModelInput<T>& in, const ForwardOptions& opts) const {
  const auto& a = in.audio;
  if (a.rank() != 4 || a.dim(1) != 1 || a.dim(2) != config_.n_mels)
    throw ShapeError("model: audio must be [N, 1, " + std::to_string(config_.n_mels) + ", W], got " + shape_str(a.shape()));
  const int N = a.dim(0), W = a.dim(3);
  if (W < min_frames())
    throw ShapeError("model: input of " + std::to_string(W) + " frames is too small for " +
                     std::to_string(config_.stem_blocks) + " pooling stages (need >= " + std::to_string(min_frames()) + ")");
  std::vector<int> widths = in.widths.empty() ? std::vector<int>(static_cast<std::size_t>(N), W) : in.widths;
  if (static_cast<int>(widths.size()) != N) throw ShapeError("model: widths size does not match batch");

  ForwardResult<T> res;
  auto x = run_stem(constant(in.audio), opts.training);
  const int fw = x->value.dim(3);
  for (int w : widths) res.feature_widths.push_back(std::clamp(stem_width(std::min(w, W)), 1, fw));

  if (config_.kind == ModelKind::FCN) {
    res.features = x;
    auto h = relu(fcn_top_bn_(fcn_top_(x), opts.training));
    res.logits = global_avg_pool(fcn_out_(h), res.feature_widths);
    return res;
  }

  const int C = config_.scaled(config_.block_channels);
  const bool malimo = config_.kind == ModelKind::MALiMo;
  const bool modulate = !opts.unmodulated;

  Var<T> q_params, a_params;
  if (modulate && !opts.identity_modulation) {
    if (static_cast<int>(in.tokens.size()) != N * in.max_len || static_cast<int>(in.lengths.size()) != N)
      throw ShapeError("model: question tokens must be [N, max_len] with one length per item");
    q_params = controller_output(question_, embedding(in.tokens, N, in.max_len, embedding_), in.lengths);
    if (malimo) {
      const int kh = std::min(config_.audio_pool, x->value.dim(2));
      const int kw = std::min(config_.audio_pool, fw);
      auto pooled = avgpool2d(x, kh, kw, kh, kw);
      const int steps = pooled->value.dim(3);
      std::vector<int> lens;
      for (int w : res.feature_widths) lens.push_back(std::clamp(w / kw, 1, steps));
      a_params = controller_output(audio_, to_time_sequence(pooled), lens);
    }
  }

  auto modulation = [&](const Var<T>& params, int unit) -> std::pair<Var<T>, Var<T>> {
    if (!modulate) return {nullptr, nullptr};
    if (!params) return {constant(Tensor<T>({N, C}, T(1))), constant(Tensor<T>({N, C}, T(0)))};
    return {add_scalar(slice_cols(params, 2 * C * unit, C), T(1)), slice_cols(params, 2 * C * unit + C, C)};
  };

  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int unit = malimo ? static_cast<int>(k / 2) : static_cast<int>(k);
    bool from_question = true;
    if (malimo) {
      const bool first = k % 2 == 0;
      from_question = (config_.order == ModulationOrder::QuestionAudio) == first;
    }
    auto [g, b] = modulation(from_question ? q_params : a_params, unit);
    x = res_block(blocks_[k], x, g, b, opts.training, modulate);
  }
  res.features = x;
  auto h = relu(head_bn_(head_conv_(x), opts.training));
  auto pooled = global_avg_pool(h, res.feature_widths);
  res.logits = head_out_(relu(head_hidden_(pooled)));
  return res;
}

template <class T>
ModelInput<T> make_input(const std::vector<const std::vector<float>*>& features, const std::vector<int>& frames,
                         int n_mels, const std::vector<std::vector<int>>& questions, int min_width) {
  if (features.size() != frames.size()) throw ShapeError("make_input: features and frame counts differ in length");
  if (!questions.empty() && questions.size() != features.size())
    throw ShapeError("make_input: questions and features differ in length");
  const int N = static_cast<int>(features.size());
  const int W = std::max(min_width, frames.empty() ? 0 : *std::max_element(frames.begin(), frames.end()));
  ModelInput<T> in;
  in.audio = Tensor<T>({N, 1, n_mels, W});
  for (int n = 0; n < N; ++n) {
    const auto& f = *features[static_cast<std::size_t>(n)];
    const int T_n = frames[static_cast<std::size_t>(n)];
    if (f.size() != static_cast<std::size_t>(T_n) * n_mels) throw ShapeError("make_input: feature size does not match frames x n_mels");
    for (int t = 0; t < T_n; ++t)
      for (int m = 0; m < n_mels; ++m) in.audio.at(n, 0, m, t) = static_cast<T>(f[static_cast<std::size_t>(t) * n_mels + m]);
  }
  in.widths = frames;
  for (const auto& q : questions) in.max_len = std::max(in.max_len, static_cast<int>(q.size()));
  in.max_len = std::max(in.max_len, 1);
  if (!questions.empty()) {
    in.tokens.assign(static_cast<std::size_t>(N) * in.max_len, 0);
    for (int n = 0; n < N; ++n) {
      const auto& q = questions[static_cast<std::size_t>(n)];
      std::copy(q.begin(), q.end(), in.tokens.begin() + static_cast<std::ptrdiff_t>(n) * in.max_len);
      in.lengths.push_back(std::max(1, static_cast<int>(q.size())));
    }
  }
  return in;
}

template class Model<float>;
template class Model<double>;
template ModelInput<float> make_input<float>(const std::vector<const std::vector<float>*>&, const std::vector<int>&, int,
                                             const std::vector<std::vector<int>>&, int);
template ModelInput<double> make_input<double>(const std::vector<const std::vector<float>*>&, const std::vector<int>&, int,
                                               const std::vector<std::vector<int>>&, int);

}  // namespace daqa::models
