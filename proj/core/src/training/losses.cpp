#include "mb2d/training/losses.hpp"

#include <vector>

#include "mb2d/errors.hpp"
#include "mb2d/image.hpp"

namespace mb2d::training {

template <class T>
nn::Var<T> mbrnn_loss(nn::Graph<T>& g, std::span<const nn::Var<T>> outputs, std::span<const nn::Var<T>> targets) {
  if (outputs.size() != targets.size() || outputs.empty())
    throw ValidationError("mbrnn_loss: " + std::to_string(outputs.size()) + " outputs vs " +
                          std::to_string(targets.size()) + " targets");
  std::vector<nn::Var<T>> terms;
  for (std::size_t k = 0; k < outputs.size(); ++k) terms.push_back(g.l1_mean(outputs[k], targets[k]));
  return g.sum(std::span<const nn::Var<T>>(terms));
}

template <class T>
nn::Var<T> msdr_loss(nn::Graph<T>& g, std::span<const nn::Var<T>> outputs, const nn::Var<T>& sharp_gt) {
  if (outputs.empty()) throw ValidationError("msdr_loss: no outputs");
  const nn::Shape& full = sharp_gt->value.shape();
  std::vector<nn::Var<T>> terms;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const int scale = static_cast<int>(i) + 1;
    const nn::Shape& s = outputs[i]->value.shape();
    if (s.h != scale_extent(full.h, scale) || s.w != scale_extent(full.w, scale) || s.c != full.c || s.n != full.n)
      throw ValidationError("msdr_loss: scale " + std::to_string(scale) + " output " + s.str() +
                            " does not match ground truth " + full.str());
    terms.push_back(g.l1_mean(outputs[i], g.resize(sharp_gt, s.h, s.w)));
  }
  return g.sum(std::span<const nn::Var<T>>(terms));
}

template nn::Var<float> mbrnn_loss<float>(nn::Graph<float>&, std::span<const nn::Var<float>>,
                                          std::span<const nn::Var<float>>);
template nn::Var<double> mbrnn_loss<double>(nn::Graph<double>&, std::span<const nn::Var<double>>,
                                            std::span<const nn::Var<double>>);
template nn::Var<float> msdr_loss<float>(nn::Graph<float>&, std::span<const nn::Var<float>>, const nn::Var<float>&);
template nn::Var<double> msdr_loss<double>(nn::Graph<double>&, std::span<const nn::Var<double>>,
                                           const nn::Var<double>&);

}  // namespace mb2d::training
