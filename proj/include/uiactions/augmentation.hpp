#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiactions/types.hpp"

// Training-set augmentation: Element Exchange and Metamorphic (reverse-transition) samples.
namespace uiactions {

struct ExchangeConfig {
  double width_tolerance = 0.10;   // relative to the larger sibling
  double height_tolerance = 0.10;
  bool include_unmoved = true;     // pairs that leave the tap target in place, tagged "exchange-context"

  void validate() const;
};

/// Patch swaps of similar siblings inside group containers; empty without a hierarchy.
std::vector<TransitionSample> element_exchange(const TransitionSample& sample, const ExchangeConfig& cfg = {});

/// One family of opposite-semantics elements, e.g. play/pause.
struct OppositePair {
  std::string name;
  std::vector<std::string> classes;  // element classes, matched case-insensitively
  std::vector<std::string> texts;    // labels, matched case-insensitively against the whole text
};

struct OppositeLexicon {
  std::vector<OppositePair> pairs;

  bool matches(const UiElement& element) const;

  static OppositeLexicon defaults();
  static OppositeLexicon from_json(const nlohmann::json& j);
  static OppositeLexicon load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Smallest clickable element of `hierarchy` covering the center of `target`.
std::optional<UiElement> tapped_element(const UiHierarchy& hierarchy, const BoundingBox& target);

/// Reversed transition (UI-2 -> UI-1, same bounds) when the tapped element is in the lexicon.
std::optional<TransitionSample> metamorphic_augment(const TransitionSample& sample,
                                                    const OppositeLexicon& lexicon = OppositeLexicon::defaults());

struct AugmentConfig {
  ExchangeConfig exchange;
  double budget_fraction = 0.26;  // added samples <= floor(budget_fraction * source count)
  std::uint64_t seed = 11;

  void validate() const;
};

struct AugmentationReport {
  std::size_t source_count = 0;
  std::size_t exchange_count = 0;
  std::size_t metamorphic_count = 0;
  double ratio_added = 0.0;

  nlohmann::json to_json() const;
};

struct AugmentedDataset {
  std::vector<TransitionSample> samples;  // sources first, then additions
  AugmentationReport report;
};

/// Candidates are drawn metamorphic first, then moved-target exchanges, then context exchanges,
/// each tier in seeded order, until the budget is spent.
AugmentedDataset augment_dataset(const std::vector<TransitionSample>& source, const OppositeLexicon& lexicon,
                                 const AugmentConfig& cfg = {});

}  // namespace uiactions
