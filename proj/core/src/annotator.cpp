#include "chfb/annotator.hpp"

#include <algorithm>
#include <charconv>
#include <future>

#include "chfb/error.hpp"
#include "chfb/image_io.hpp"
#include "chfb/pipeline.hpp"

namespace chfb {

namespace {

ServiceResponse json_response(int status, const nlohmann::json& body) { return {status, "application/json", body.dump()}; }

ServiceResponse error_response(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

ServiceResponse missing_stage(const std::string& stage, const std::string& artifact) {
  return error_response(409, "artifact " + artifact + " is missing; run '" + stage + "' first",
                        {{"missing_stage", stage}, {"artifact", artifact}});
}

bool valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-' || c == '.'; });
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  const std::string p = path.substr(0, path.find('?'));
  while (start <= p.size()) {
    const auto next = p.find('/', start);
    const auto part = p.substr(start, next == std::string::npos ? std::string::npos : next - start);
    if (!part.empty()) parts.push_back(part);
    if (next == std::string::npos) break;
    start = next + 1;
  }
  return parts;
}

nlohmann::json labels_json(const std::map<int, Label>& labels) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, l] : labels) out[std::to_string(id)] = to_string(l);
  return out;
}

std::optional<int> body_revision(const nlohmann::json& body) {
  if (body.is_object() && body.contains("revision") && !body["revision"].is_null()) return body["revision"].get<int>();
  return std::nullopt;
}

}  // namespace

AnnotatorService::AnnotatorService(AnnotatorOptions opts) : opts_(std::move(opts)) {
  if (!opts_.labels_dir.empty()) std::filesystem::create_directories(opts_.labels_dir);
  writer_ = std::jthread([this] {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(queue_mutex_);
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  });
}

AnnotatorService::~AnnotatorService() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
}

ServiceResponse AnnotatorService::run_on_writer(std::function<ServiceResponse()> task) {
  auto packaged = std::make_shared<std::packaged_task<ServiceResponse()>>(std::move(task));
  auto result = packaged->get_future();
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back([packaged] { (*packaged)(); });
  }
  queue_cv_.notify_one();
  return result.get();
}

bool AnnotatorService::known_image(const std::string& id) const {
  return valid_id(id) && std::filesystem::exists(opts_.out_dir / id / "meta.json");
}

std::shared_ptr<const AnnotatorService::ImageState> AnnotatorService::snapshot(const std::string& id) {
  {
    std::lock_guard lock(state_mutex_);
    if (auto it = states_.find(id); it != states_.end()) return it->second;
  }
  const auto dir = opts_.out_dir / id;
  auto state = std::make_shared<ImageState>();
  const auto meta = read_json_file(dir / "meta.json");
  state->width = meta.at("width").get<int>();
  state->height = meta.at("height").get<int>();
  const auto contours = read_json_file(dir / "contours.json");
  for (const auto& c : contours) state->refined.push_back(contour_from_json(c).second);

  const auto stored = opts_.labels_dir / (id + ".json");
  if (!opts_.labels_dir.empty() && std::filesystem::exists(stored)) {
    state->doc = load_label_document(stored);
  } else if (std::filesystem::exists(dir / "labels.json")) {
    state->doc = load_label_document(dir / "labels.json");
  }
  state->doc.image_id = id;
  state->doc.flesh.clear();
  for (const auto& c : contours) {
    if (c.value("flesh", false)) state->doc.flesh.insert(c.at("id").get<int>());
  }
  state->doc.labels = compute_labels(state->doc, state->refined, state->width, state->height);

  std::lock_guard lock(state_mutex_);
  auto [it, inserted] = states_.emplace(id, std::move(state));
  return it->second;
}

void AnnotatorService::publish(const std::string& id, std::shared_ptr<const ImageState> state) {
  std::lock_guard lock(state_mutex_);
  states_[id] = std::move(state);
}

LabelDocument AnnotatorService::document(const std::string& image_id) { return snapshot(image_id)->doc; }

ServiceResponse AnnotatorService::mutate(const std::string& id, const std::optional<int>& revision,
                                         std::function<ServiceResponse(ImageState&)> change) {
  return run_on_writer([&, this]() -> ServiceResponse {
    auto current = snapshot(id);
    if (revision && *revision != current->doc.revision) {
      return error_response(409, "label document changed since revision " + std::to_string(*revision),
                            {{"retryable", true}, {"revision", current->doc.revision}});
    }
    auto next = std::make_shared<ImageState>(*current);
    auto response = change(*next);
    if (response.status != 200) return response;
    next->doc.labels = compute_labels(next->doc, next->refined, next->width, next->height);
    if (!opts_.labels_dir.empty()) save_label_document(next->doc, opts_.labels_dir / (id + ".json"));
    auto body = nlohmann::json::parse(response.body);
    body["image_id"] = id;
    body["revision"] = next->doc.revision;
    body["labels"] = labels_json(next->doc.labels);
    publish(id, std::move(next));
    return json_response(200, body);
  });
}

ServiceResponse AnnotatorService::handle(const ServiceRequest& req) {
  if (!opts_.token.empty() && req.authorization != "Bearer " + opts_.token) {
    return error_response(401, "missing or invalid bearer token");
  }
  const auto parts = split_path(req.path);
  if (parts.empty() || parts[0] != "images") return error_response(404, "no such route");
  try {
    if (parts.size() == 1) {
      if (req.method != "GET") return error_response(405, "method not allowed");
      return list_images();
    }
    const std::string& id = parts[1];
    if (!known_image(id)) return error_response(404, "unknown image '" + id + "'");

    nlohmann::json body = nlohmann::json::object();
    if (req.method == "POST" || req.method == "DELETE") {
      if (!req.body.empty()) {
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
          return error_response(400, "request body is not valid JSON");
        }
        if (!body.is_object()) return error_response(400, "request body must be a JSON object");
      }
    }

    if (parts.size() == 2 && req.method == "GET") return image_png(id);
    if (parts.size() == 3) {
      const auto& what = parts[2];
      if (req.method == "GET") {
        if (what == "contours") return contours(id);
        if (what == "regions") return regions(id);
        if (what == "dendrogram") return dendrogram(id);
        if (what == "labels") return labels(id);
      } else if (req.method == "POST") {
        if (what == "selections") return add_selection(id, body);
        if (what == "deselect") return deselect(id, body);
        if (what == "cut") return cut(id, body);
      }
    }
    if (parts.size() == 4 && parts[2] == "selections" && req.method == "DELETE") {
      return remove_selection(id, parts[3], body);
    }
    return error_response(404, "no such route");
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::InvalidSelection:
      case ErrorCode::InvalidInput:
        return error_response(400, e.what());
      case ErrorCode::NotFound:
        return error_response(409, e.what(), {{"missing_stage", "process"}});
      default:
        return error_response(500, e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("malformed request: ") + e.what());
  }
}

ServiceResponse AnnotatorService::list_images() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& id : processed_ids(opts_.out_dir)) {
    const auto meta = read_json_file(opts_.out_dir / id / "meta.json");
    arr.push_back({{"id", id},
                   {"width", meta.value("width", 0)},
                   {"height", meta.value("height", 0)},
                   {"contours", meta.value("contours", 0)},
                   {"has_dendrogram", std::filesystem::exists(opts_.out_dir / id / "cluster.json")}});
  }
  return json_response(200, {{"images", arr}});
}

ServiceResponse AnnotatorService::image_png(const std::string& id) {
  const auto path = opts_.out_dir / id / "enhanced.png";
  if (!std::filesystem::exists(path)) return missing_stage("process", "enhanced.png");
  const auto bytes = read_file_bytes(path);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

ServiceResponse AnnotatorService::contours(const std::string& id) {
  const auto path = opts_.out_dir / id / "contours.json";
  if (!std::filesystem::exists(path)) return missing_stage("process", "contours.json");
  auto arr = read_json_file(path);
  const auto state = snapshot(id);
  for (auto& c : arr) {
    const int cid = c.at("id").get<int>();
    if (auto it = state->doc.labels.find(cid); it != state->doc.labels.end()) c["label"] = to_string(it->second);
    c["deselected"] = state->doc.deselected.contains(cid);
  }
  return json_response(200, {{"image_id", id}, {"revision", state->doc.revision}, {"contours", arr}});
}

ServiceResponse AnnotatorService::regions(const std::string& id) {
  const auto path = opts_.out_dir / id / "regions.json";
  if (!std::filesystem::exists(path)) return missing_stage("process", "regions.json");
  return json_response(200, read_json_file(path));
}

ServiceResponse AnnotatorService::dendrogram(const std::string& id) {
  const auto path = opts_.out_dir / id / "cluster.json";
  if (!std::filesystem::exists(path)) return missing_stage("cluster", "cluster.json");
  return json_response(200, read_json_file(path));
}

ServiceResponse AnnotatorService::labels(const std::string& id) {
  const auto state = snapshot(id);
  return json_response(200, to_json(state->doc));
}

ServiceResponse AnnotatorService::add_selection(const std::string& id, const nlohmann::json& body) {
  const Rect r = rect_from_json(body);
  return mutate(id, body_revision(body), [&](ImageState& s) {
    validate_rect(r, s.width, s.height);
    s.doc.apply({EventKind::AddRect, r, 0, std::nullopt});
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& x : s.doc.rects) rects.push_back(rect_to_json(x));
    return json_response(200, {{"rects", rects}});
  });
}

ServiceResponse AnnotatorService::remove_selection(const std::string& id, const std::string& index,
                                                   const nlohmann::json& body) {
  int k = -1;
  auto [ptr, ec] = std::from_chars(index.data(), index.data() + index.size(), k);
  if (ec != std::errc() || ptr != index.data() + index.size()) return error_response(400, "selection index must be an integer");
  return mutate(id, body_revision(body), [&](ImageState& s) {
    if (k < 0 || static_cast<std::size_t>(k) >= s.doc.rects.size()) {
      return error_response(404, "no selection rectangle at index " + std::to_string(k));
    }
    s.doc.apply({EventKind::RemoveRect, std::nullopt, k, std::nullopt});
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& x : s.doc.rects) rects.push_back(rect_to_json(x));
    return json_response(200, {{"rects", rects}});
  });
}

ServiceResponse AnnotatorService::deselect(const std::string& id, const nlohmann::json& body) {
  if (!body.contains("contour_id") || !body["contour_id"].is_number_integer()) {
    return error_response(400, "deselect needs an integer contour_id");
  }
  const int cid = body["contour_id"].get<int>();
  const bool on = body.value("deselect", true);
  return mutate(id, body_revision(body), [&](ImageState& s) {
    const bool exists = std::any_of(s.refined.begin(), s.refined.end(), [&](const RefinedContour& rc) { return rc.source_id == cid; });
    if (!exists) return error_response(400, "image has no contour " + std::to_string(cid));
    s.doc.apply({on ? EventKind::Deselect : EventKind::Reselect, std::nullopt, cid, std::nullopt});
    return json_response(200, {{"deselected", s.doc.deselected}});
  });
}

ServiceResponse AnnotatorService::cut(const std::string& id, const nlohmann::json& body) {
  if (!body.contains("threshold") || !body["threshold"].is_number()) return error_response(400, "cut needs a numeric threshold");
  const double t = body["threshold"].get<double>();
  if (!(t >= 0.0)) return error_response(400, "cut threshold must be >= 0");
  const auto path = opts_.out_dir / id / "cluster.json";
  if (!std::filesystem::exists(path)) return missing_stage("cluster", "cluster.json");
  const auto doc = read_json_file(path);
  const auto dendro = dendrogram_from_json(doc.at("dendrogram"));
  return mutate(id, body_revision(body), [&](ImageState& s) {
    s.doc.apply({EventKind::Cut, std::nullopt, 0, t});
    auto out = to_json(chfb::cut(dendro, t));
    return json_response(200, out);
  });
}

}  // namespace chfb
