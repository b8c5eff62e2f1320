#pragma once

#include <span>

#include "mb2d/nn/graph.hpp"

namespace mb2d::training {

/// Sum over iterations of the per-pixel mean L1 between predicted and true
/// more-blurred images.
template <class T>
nn::Var<T> mbrnn_loss(nn::Graph<T>& g, std::span<const nn::Var<T>> outputs, std::span<const nn::Var<T>> targets);

/// Sum over scales of the per-pixel mean L1 against the bilinearly
/// downsampled sharp image. outputs[s - 1] is scale s.
template <class T>
nn::Var<T> msdr_loss(nn::Graph<T>& g, std::span<const nn::Var<T>> outputs, const nn::Var<T>& sharp_gt);

}  // namespace mb2d::training
