#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::data {

struct FoldSplit {
  std::size_t k = 5;
  std::vector<std::size_t> assignments;  // frame index -> fold id in [0, k)
  std::uint64_t seed = 0;
  bool subject_wise = false;

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignments) ++sizes.at(a);
    return sizes;
  }
};

namespace detail {

// Shuffles each class's members and deals them round-robin. The fold counter
// carries over between classes so overall fold sizes differ by at most one.
template <typename Key>
std::map<Key, std::size_t> deal_stratified(const std::vector<Key>& sz_members,
                                           const std::vector<Key>& hc_members, std::size_t k,
                                           std::uint64_t seed) {
  std::map<Key, std::size_t> fold_of;
  std::size_t next = 0;
  std::uint64_t stream = 0;
  for (const auto* members : {&sz_members, &hc_members}) {
    auto order = *members;
    Rng rng = Rng::derive(seed, stream++);
    rng.shuffle(order);
    for (const auto& m : order) {
      fold_of[m] = next;
      next = (next + 1) % k;
    }
  }
  return fold_of;
}

}  // namespace detail

// Stratified frame-level k-fold assignment.
inline FoldSplit split_kfold(const FrameSet& set, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("split_kfold: k must be at least 2");
  std::vector<std::size_t> sz, hc;
  for (std::size_t i = 0; i < set.size(); ++i) (set[i].label == Label::SZ ? sz : hc).push_back(i);
  for (auto [name, n] : {std::pair{"SZ", sz.size()}, std::pair{"HC", hc.size()}}) {
    if (n < k) {
      throw DataError(std::string("split_kfold: class ") + name + " has " + std::to_string(n) +
                      " frames, fewer than k=" + std::to_string(k));
    }
  }
  auto fold_of = detail::deal_stratified(sz, hc, k, seed);
  FoldSplit split{k, std::vector<std::size_t>(set.size()), seed, false};
  for (auto [idx, fold] : fold_of) split.assignments[idx] = fold;
  return split;
}

// Subject-wise variant: every frame of a subject lands in the same fold.
inline FoldSplit split_kfold_by_subject(const FrameSet& set, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("split_kfold: k must be at least 2");
  std::map<std::string, Label> subjects;
  for (const auto& f : set.frames) {
    auto [it, inserted] = subjects.emplace(f.subject_id, f.label);
    if (!inserted && it->second != f.label) {
      throw DataError("split_kfold: subject '" + f.subject_id + "' carries both labels");
    }
  }
  std::vector<std::string> sz, hc;
  for (const auto& [id, label] : subjects) (label == Label::SZ ? sz : hc).push_back(id);
  for (auto [name, n] : {std::pair{"SZ", sz.size()}, std::pair{"HC", hc.size()}}) {
    if (n < k) {
      throw DataError(std::string("split_kfold: class ") + name + " has " + std::to_string(n) +
                      " subjects, fewer than k=" + std::to_string(k));
    }
  }
  auto fold_of = detail::deal_stratified(sz, hc, k, seed);
  FoldSplit split{k, std::vector<std::size_t>(set.size()), seed, true};
  for (std::size_t i = 0; i < set.size(); ++i) split.assignments[i] = fold_of.at(set[i].subject_id);
  return split;
}

}  // namespace eegbench::data
