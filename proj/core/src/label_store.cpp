#include "chfb/label_store.hpp"

#include <fstream>

#include "chfb/error.hpp"

namespace chfb {

namespace {

constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::AddRect, "add-rect"}, {EventKind::RemoveRect, "remove-rect"}, {EventKind::Deselect, "deselect"},
    {EventKind::Reselect, "reselect"}, {EventKind::Cut, "cut"}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kEventNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kEventNames) {
    if (name == s) return kind;
  }
  throw Error(ErrorCode::Parse, "unknown label event '" + std::string(s) + "'");
}

void LabelDocument::apply(const LabelEvent& e) {
  switch (e.kind) {
    case EventKind::AddRect:
      if (!e.rect) throw Error(ErrorCode::InvalidSelection, "add-rect event without a rectangle");
      rects.push_back(*e.rect);
      break;
    case EventKind::RemoveRect:
      if (e.index < 0 || static_cast<std::size_t>(e.index) >= rects.size()) {
        throw Error(ErrorCode::InvalidSelection, "no selection rectangle at index " + std::to_string(e.index));
      }
      rects.erase(rects.begin() + e.index);
      break;
    case EventKind::Deselect:
      deselected.insert(e.index);
      break;
    case EventKind::Reselect:
      deselected.erase(e.index);
      break;
    case EventKind::Cut:
      if (!e.threshold || !(*e.threshold >= 0.0)) {
        throw Error(ErrorCode::InvalidSelection, "cut threshold must be a non-negative number");
      }
      cut_threshold = e.threshold;
      break;
  }
  events.push_back(e);
  ++revision;
}

std::map<int, Label> compute_labels(const LabelDocument& doc, std::span<const RefinedContour> contours, int width,
                                    int height) {
  const auto area = label_by_area(contours, doc.rects, width, height);
  std::map<int, Label> out;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    const int id = contours[i].source_id;
    if (doc.flesh.contains(id)) {
      out[id] = Label::FleshAuto;
    } else if (area[i] == Label::Fractured && !doc.deselected.contains(id)) {
      out[id] = Label::Fractured;
    } else {
      out[id] = Label::NonFractured;
    }
  }
  return out;
}

LabelDocument replay(const LabelDocument& doc) {
  LabelDocument out;
  out.image_id = doc.image_id;
  out.flesh = doc.flesh;
  for (const auto& e : doc.events) out.apply(e);
  return out;
}

nlohmann::json to_json(const LabelEvent& e) {
  nlohmann::json j{{"kind", to_string(e.kind)}};
  switch (e.kind) {
    case EventKind::AddRect:
      j["rect"] = rect_to_json(*e.rect);
      break;
    case EventKind::RemoveRect:
      j["index"] = e.index;
      break;
    case EventKind::Deselect:
    case EventKind::Reselect:
      j["contour_id"] = e.index;
      break;
    case EventKind::Cut:
      j["threshold"] = *e.threshold;
      break;
  }
  return j;
}

LabelEvent event_from_json(const nlohmann::json& j) {
  try {
    LabelEvent e;
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    switch (e.kind) {
      case EventKind::AddRect:
        e.rect = rect_from_json(j.at("rect"));
        break;
      case EventKind::RemoveRect:
        e.index = j.at("index").get<int>();
        break;
      case EventKind::Deselect:
      case EventKind::Reselect:
        e.index = j.at("contour_id").get<int>();
        break;
      case EventKind::Cut:
        e.threshold = j.at("threshold").get<double>();
        break;
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Parse, std::string("label event: ") + ex.what());
  }
}

nlohmann::json to_json(const LabelDocument& doc) {
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& r : doc.rects) rects.push_back(rect_to_json(r));
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [id, l] : doc.labels) labels[std::to_string(id)] = to_string(l);
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : doc.events) events.push_back(to_json(e));
  nlohmann::json j{{"version", kLabelSchemaVersion},
                   {"image_id", doc.image_id},
                   {"revision", doc.revision},
                   {"rects", rects},
                   {"deselected", doc.deselected},
                   {"flesh", doc.flesh},
                   {"labels", labels},
                   {"events", events}};
  j["cut_threshold"] = doc.cut_threshold ? nlohmann::json(*doc.cut_threshold) : nlohmann::json(nullptr);
  return j;
}

LabelDocument label_document_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kLabelSchemaVersion) {
      throw Error(ErrorCode::Parse, "unsupported label document version " + std::to_string(version));
    }
    LabelDocument doc;
    doc.image_id = j.at("image_id").get<std::string>();
    doc.revision = j.value("revision", 0);
    for (const auto& r : j.at("rects")) doc.rects.push_back(rect_from_json(r));
    doc.deselected = j.value("deselected", std::set<int>{});
    doc.flesh = j.value("flesh", std::set<int>{});
    const nlohmann::json labels = j.value("labels", nlohmann::json::object());
    for (const auto& [k, v] : labels.items()) {
      doc.labels[std::stoi(k)] = label_from_string(v.get<std::string>());
    }
    for (const auto& e : j.value("events", nlohmann::json::array())) doc.events.push_back(event_from_json(e));
    if (j.contains("cut_threshold") && !j["cut_threshold"].is_null()) {
      doc.cut_threshold = j["cut_threshold"].get<double>();
    }
    return doc;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Parse, std::string("label document: ") + ex.what());
  }
}

LabelDocument load_label_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open label document " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Parse, path.string() + ": " + ex.what());
  }
  return label_document_from_json(j);
}

void save_label_document(const LabelDocument& doc, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out << to_json(doc).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace chfb
