#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/contour.hpp"
#include "chfb/dataset.hpp"
#include "chfb/label.hpp"

namespace chfb {

inline constexpr int kLabelSchemaVersion = 1;

enum class EventKind { AddRect, RemoveRect, Deselect, Reselect, Cut };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct LabelEvent {
  EventKind kind = EventKind::AddRect;
  std::optional<Rect> rect;         ///< AddRect
  int index = 0;                    ///< RemoveRect: rectangle position; (De|Re)select: contour id
  std::optional<double> threshold;  ///< Cut
  bool operator==(const LabelEvent&) const = default;
};

/// Annotation state of one image. `revision` counts applied mutations and is
/// the optimistic-concurrency token of the annotator service.
struct LabelDocument {
  std::string image_id;
  int revision = 0;
  std::vector<Rect> rects;
  std::set<int> deselected;
  std::set<int> flesh;  ///< set by flesh isolation, not by the annotator
  std::optional<double> cut_threshold;
  std::map<int, Label> labels;
  std::vector<LabelEvent> events;

  /// Applies and records one mutation. Throws InvalidSelection for an
  /// out-of-range rectangle index.
  void apply(const LabelEvent& e);

  bool operator==(const LabelDocument&) const = default;
};

/// Per-contour labels: flesh-auto for flesh contours, fractured when a
/// refined endpoint lies inside a rectangle and the contour is not deselected.
std::map<int, Label> compute_labels(const LabelDocument& doc, std::span<const RefinedContour> contours, int width,
                                    int height);

/// Rebuilds the mutable state from an empty document with the same image id
/// and flesh set by re-applying the recorded events.
LabelDocument replay(const LabelDocument& doc);

nlohmann::json to_json(const LabelEvent& e);
LabelEvent event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LabelDocument& doc);
LabelDocument label_document_from_json(const nlohmann::json& j);

LabelDocument load_label_document(const std::filesystem::path& path);
/// Writes through a temporary file and rename.
void save_label_document(const LabelDocument& doc, const std::filesystem::path& path);

}  // namespace chfb
