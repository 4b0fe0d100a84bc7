#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/clustering.hpp"
#include "chfb/contour.hpp"
#include "chfb/label_store.hpp"

namespace chfb {

struct ServiceRequest {
  std::string method;  ///< GET, POST, DELETE
  std::string path;
  std::string body;
  std::string authorization;  ///< raw Authorization header
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct AnnotatorOptions {
  std::filesystem::path out_dir;     ///< processed artifacts, one directory per image
  std::filesystem::path labels_dir;  ///< label documents, written on every mutation
  std::string token;                 ///< empty disables authentication
};

/// Request handling for the annotation UI. Reads are served from immutable
/// per-image snapshots; every mutation runs on one writer thread, which
/// persists the label document before publishing the new snapshot.
///
///   GET    /images
///   GET    /images/{id}                  enhanced PNG
///   GET    /images/{id}/contours|regions|dendrogram|labels
///   POST   /images/{id}/selections       {x0, y0, x1, y1[, revision]}
///   DELETE /images/{id}/selections/{k}
///   POST   /images/{id}/deselect         {contour_id[, deselect][, revision]}
///   POST   /images/{id}/cut              {threshold[, revision]}
///
/// A request carrying a stale revision gets 409 with "retryable": true.
class AnnotatorService {
 public:
  explicit AnnotatorService(AnnotatorOptions opts);
  ~AnnotatorService();
  AnnotatorService(const AnnotatorService&) = delete;
  AnnotatorService& operator=(const AnnotatorService&) = delete;

  ServiceResponse handle(const ServiceRequest& req);

  /// Current label document of an image, loading it on first use.
  LabelDocument document(const std::string& image_id);

 private:
  struct ImageState {
    LabelDocument doc;
    std::vector<RefinedContour> refined;
    int width = 0;
    int height = 0;
  };

  std::shared_ptr<const ImageState> snapshot(const std::string& id);
  void publish(const std::string& id, std::shared_ptr<const ImageState> state);
  ServiceResponse mutate(const std::string& id, const std::optional<int>& revision,
                         std::function<ServiceResponse(ImageState&)> change);
  ServiceResponse run_on_writer(std::function<ServiceResponse()> task);
  bool known_image(const std::string& id) const;

  ServiceResponse list_images();
  ServiceResponse image_png(const std::string& id);
  ServiceResponse contours(const std::string& id);
  ServiceResponse regions(const std::string& id);
  ServiceResponse dendrogram(const std::string& id);
  ServiceResponse labels(const std::string& id);
  ServiceResponse add_selection(const std::string& id, const nlohmann::json& body);
  ServiceResponse remove_selection(const std::string& id, const std::string& index, const nlohmann::json& body);
  ServiceResponse deselect(const std::string& id, const nlohmann::json& body);
  ServiceResponse cut(const std::string& id, const nlohmann::json& body);

  AnnotatorOptions opts_;
  std::mutex state_mutex_;
  std::map<std::string, std::shared_ptr<const ImageState>> states_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::jthread writer_;
};

}  // namespace chfb
