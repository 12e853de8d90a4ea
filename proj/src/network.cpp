#include "ulo/network.hpp"

namespace ulo {

Network::Network(const LogicMode& mode, uint64_t seed) : mode_(mode) {
  struct ConvSpec {
    int64_t c_in, c_out, stride;
  };
  const ConvSpec plan[6] = {{1, 32, 1},  {32, 32, 1},  {32, 64, 2},
                            {64, 64, 1}, {64, 128, 2}, {128, 128, 1}};
  convs_.reserve(6);
  bns_.reserve(6);
  for (int i = 0; i < 6; ++i) {
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(i));
    const std::string name = "conv" + std::to_string(i + 1);
    convs_.emplace_back(name, plan[i].c_out, plan[i].c_in, 3, 3, plan[i].stride,
                        1, mode, rng);
    bns_.emplace_back("bn" + std::to_string(i + 1), plan[i].c_out);
  }
  // 28 -> 28 -> 28 -> 14 -> 14 -> 7 -> 7; flatten 128*7*7
  Rng rng = Rng::derive(seed, 6);
  fc_holder_.emplace_back("fc", 10, 128 * 7 * 7, mode, rng);
  // The averaged form z = (1/K) x.w needs w ~ sqrt(2K) at the output layer
  // for O(1) logits; hidden layers sit behind batch norm, which absorbs the
  // small scale, but this layer does not. With the plain sqrt(2/K) draw the
  // logits start at ~1e-4 and the layer's updates are K^2-suppressed, which
  // freezes training at this epoch budget.
  {
    UloDense& dense = fc();
    const double k = static_cast<double>(dense.fan_in());
    for (int64_t i = 0; i < dense.w.value.numel(); ++i) dense.w.value[i] *= k;
  }
}

Value Network::forward(Tape& t, Value x, bool training) {
  Value h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(t, h);
    h = ops::batchnorm(t, h, bns_[i], training);
    h = ops::relu(t, h);
  }
  const Tensor& hv = t.val(h);
  h = ops::reshape(t, h, {hv.dim(0), hv.dim(1) * hv.dim(2) * hv.dim(3)});
  return fc().forward(t, h);
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& c : convs_) {
    out.push_back(&c.w);
    out.push_back(&c.bias);
    if (c.mode.is_learnable()) out.push_back(&c.logic);
  }
  for (auto& b : bns_) {
    out.push_back(&b.scale);
    out.push_back(&b.shift);
  }
  out.push_back(&fc().w);
  out.push_back(&fc().bias);
  if (fc().mode.is_learnable()) out.push_back(&fc().logic);
  return out;
}

std::vector<Parameter*> Network::logic_parameters() {
  std::vector<Parameter*> out;
  if (!mode_.is_learnable()) return out;
  for (auto& c : convs_) out.push_back(&c.logic);
  out.push_back(&fc().logic);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Network::logic_tensors()
    const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const auto& c : convs_) out.emplace_back(c.name, &c.logic.value);
  const UloDense& dense = fc_holder_.front();
  out.emplace_back(dense.name, &dense.logic.value);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Network::state_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& c : convs_) {
    out.emplace_back(c.name + ".w", &c.w.value);
    out.emplace_back(c.name + ".B", &c.bias.value);
    out.emplace_back(c.name + ".logic", &c.logic.value);
  }
  for (auto& b : bns_) {
    out.emplace_back(b.scale.name, &b.scale.value);
    out.emplace_back(b.shift.name, &b.shift.value);
    const std::string base = b.scale.name.substr(0, b.scale.name.find(".scale"));
    out.emplace_back(base + ".running_mean", &b.running_mean);
    out.emplace_back(base + ".running_var", &b.running_var);
  }
  out.emplace_back("fc.w", &fc().w.value);
  out.emplace_back("fc.B", &fc().bias.value);
  out.emplace_back("fc.logic", &fc().logic.value);
  return out;
}

Network build_mnist_net(const LogicMode& mode, uint64_t seed) {
  return Network(mode, seed);
}

}  // namespace ulo
