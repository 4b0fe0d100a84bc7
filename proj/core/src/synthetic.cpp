#include "chfb/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chfb/error.hpp"
#include "chfb/image_io.hpp"
#include "chfb/label_store.hpp"
#include "chfb/rng.hpp"

namespace chfb {

namespace {

constexpr double kBackground = 25.0;
constexpr double kFlesh = 100.0;
constexpr double kMedulla = 170.0;
constexpr double kCortex = 215.0;
constexpr double kCrack = 85.0;
constexpr double kJoint = 220.0;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double shaft_centre(const SyntheticSpec& s, double frac, double y) {
  return frac * s.width + s.tilt * (y / s.height - 0.5);
}

int bone_top(const SyntheticSpec& s) { return static_cast<int>(std::lround(0.2 * s.height)) + 4; }
int bone_bottom(const SyntheticSpec& s) { return static_cast<int>(std::lround(s.foot_start * s.height)) - 4; }

struct Crack {
  double y;
  int gap;
  int margin;
};

std::vector<Crack> cracks(const SyntheticSpec& s) {
  std::vector<Crack> out;
  if (!s.fracture) return out;
  const auto& f = *s.fracture;
  out.push_back({f.y, f.gap, f.margin});
  for (int k = 1; k <= f.extra_cracks; ++k) {
    const double dir = (k % 2 == 1) ? 1.0 : -1.0;
    out.push_back({f.y + dir * f.crack_spacing * ((k + 1) / 2), std::max(2, f.gap - 1), f.margin + 2 * ((k + 1) / 2)});
  }
  return out;
}

/// Rows [top, top + gap) at column x, or empty when x misses the crack.
std::vector<int> rows_of(const SyntheticSpec& s, const Crack& c, int x) {
  const double cx = shaft_centre(s, s.tibia_x, c.y);
  const double half = s.tibia_half * s.width;
  if (x < cx - half + c.margin || x > cx + half - c.margin) return {};
  const double yc = c.y + s.fracture->slope * (x - cx);
  const int top = static_cast<int>(std::lround(yc - c.gap / 2.0));
  std::vector<int> rows;
  for (int r = top; r < top + c.gap; ++r) rows.push_back(r);
  return rows;
}

double flesh_edge(double base, double wiggle, double y, double phase, double freq) {
  return base + wiggle * (std::sin(y * freq + phase) + 0.6 * std::sin(y * freq * 2.7 + 1.3 * phase));
}

}  // namespace

void validate(const SyntheticSpec& s) {
  if (s.width < 64 || s.height < 128) throw Error(ErrorCode::Config, "synthetic image must be at least 64x128");
  if (!(s.knee_end > 0.0 && s.knee_end < s.foot_start && s.foot_start < 1.0)) {
    throw Error(ErrorCode::Config, "synthetic bands need 0 < knee_end < foot_start < 1");
  }
  if (!(s.flesh_left > 0.0 && s.flesh_left < s.flesh_right && s.flesh_right < 1.0)) {
    throw Error(ErrorCode::Config, "synthetic flesh boundaries need 0 < left < right < 1");
  }
  if (s.noise_sigma < 0.0) throw Error(ErrorCode::Config, "noise_sigma must be >= 0");
  if (s.fracture) {
    const auto& f = *s.fracture;
    if (f.gap < 1) throw Error(ErrorCode::Config, "fracture gap must be >= 1 row");
    for (const auto& c : cracks(s)) {
      if (c.y - 2 * c.gap < bone_top(s) || c.y + 2 * c.gap > bone_bottom(s)) {
        throw Error(ErrorCode::Config, "fracture must lie inside the leg band");
      }
    }
    if (2 * (f.margin + 2 * f.extra_cracks) + 4 >= 2.0 * s.tibia_half * s.width) {
      throw Error(ErrorCode::Config, "fracture margins leave no crack inside the shaft");
    }
  }
}

int tibia_centre_column(const SyntheticSpec& spec, double y) {
  return static_cast<int>(std::lround(shaft_centre(spec, spec.tibia_x, y)));
}

std::vector<int> crack_rows_at(const SyntheticSpec& spec, int x) {
  std::vector<int> out;
  for (const auto& c : cracks(spec)) {
    auto r = rows_of(spec, c, x);
    out.insert(out.end(), r.begin(), r.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SyntheticSpec random_spec(std::uint64_t seed, bool fractured, int width, int height) {
  Rng rng(derive_seed(seed, {0x5e7}));
  SyntheticSpec s;
  s.width = width;
  s.height = height;
  s.seed = seed;
  s.tibia_x = rng.uniform(0.36, 0.44);
  s.tibia_half = rng.uniform(0.075, 0.095);
  s.fibula_x = s.tibia_x + rng.uniform(0.22, 0.28);
  s.fibula_half = rng.uniform(0.028, 0.04);
  s.tilt = rng.uniform(-10.0, 10.0);
  s.flesh_left = rng.uniform(0.06, 0.12);
  s.flesh_right = rng.uniform(0.88, 0.94);
  s.flesh_wiggle = rng.uniform(3.0, 6.0);
  s.flesh_ramp = rng.uniform_int(1, 3);
  s.flesh_contrast = rng.uniform(50.0, 75.0);
  s.flesh_folds = rng.uniform_int(2, 6);
  s.knee_end = rng.uniform(0.13, 0.16);
  s.foot_start = rng.uniform(0.80, 0.84);
  s.noise_sigma = rng.uniform(2.0, 4.0);
  if (fractured) {
    FractureSpec f;
    const double lo = s.knee_end * height + 40.0;
    const double hi = s.foot_start * height - 50.0;
    f.y = rng.uniform(lo, hi);
    f.gap = rng.uniform_int(3, 6);
    f.slope = rng.uniform(-0.25, 0.25);
    f.margin = rng.uniform_int(5, 7);
    f.extra_cracks = rng.uniform_int(0, 2);
    f.crack_spacing = rng.uniform_int(9, 12);
    s.fracture = f;
  }
  return s;
}

SyntheticImage generate_synthetic(const SyntheticSpec& s) {
  validate(s);
  Rng rng(derive_seed(s.seed, {0x1a6e}));
  const int w = s.width;
  const int h = s.height;
  std::vector<double> canvas(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kBackground);
  auto px = [&](int x, int y) -> double& { return canvas[static_cast<std::size_t>(y) * w + x]; };

  const double phase_l = rng.uniform(0.0, 6.28);
  const double phase_r = rng.uniform(0.0, 6.28);
  const double freq = rng.uniform(0.05, 0.09);
  const double contrast_phase = rng.uniform(0.0, 6.28);
  const double contrast_freq = rng.uniform(0.03, 0.06);
  const int b_top = bone_top(s);
  const int b_bottom = bone_bottom(s);

  for (int y = 0; y < h; ++y) {
    const double left = flesh_edge(s.flesh_left * w, s.flesh_wiggle, y, phase_l, freq);
    const double right = flesh_edge(s.flesh_right * w, s.flesh_wiggle, y, phase_r, freq);
    // Skin-line contrast fades in and out along the limb, so the line
    // breaks into fragments.
    const double contrast = s.flesh_contrast * (0.35 + 0.65 * std::abs(std::sin(y * contrast_freq + contrast_phase)));
    const double outside = kFlesh - contrast;
    for (int x = 0; x < w; ++x) {
      const double depth_in = std::min(x - left, right - x);
      const double inside = smoothstep(-s.flesh_ramp, s.flesh_ramp, depth_in);
      const double body = 12.0 * std::clamp(depth_in / 10.0, 0.0, 1.0);
      px(x, y) = outside + inside * (contrast + body);
    }
    if (y < b_top || y > b_bottom) continue;
    for (const auto& [frac, half_frac] : {std::pair{s.tibia_x, s.tibia_half}, std::pair{s.fibula_x, s.fibula_half}}) {
      const double c = shaft_centre(s, frac, y);
      const double half = half_frac * w;
      for (int x = std::max(0, static_cast<int>(c - half) - 1); x <= std::min(w - 1, static_cast<int>(c + half) + 1); ++x) {
        const double u = std::abs(x - c) / half;
        if (u >= 1.0) continue;
        px(x, y) = kMedulla + (kCortex - kMedulla) * smoothstep(0.45, 0.8, u);
      }
    }
  }

  // Joint structures: stacked horizontal plates in the knee and foot bands.
  auto plates = [&](int first_row, int count, int thickness, int pitch) {
    for (int k = 0; k < count; ++k) {
      const int x0 = static_cast<int>(std::lround(w * rng.uniform(0.14, 0.2)));
      const int x1 = static_cast<int>(std::lround(w * rng.uniform(0.8, 0.86)));
      const int y0 = first_row + k * pitch;
      for (int y = y0; y < std::min(h, y0 + thickness); ++y) {
        for (int x = x0; x <= x1; ++x) px(x, y) = kJoint;
      }
    }
  };
  const int knee_end = static_cast<int>(std::lround(s.knee_end * h));
  const int foot_start = static_cast<int>(std::lround(s.foot_start * h));
  const int knee_pitch = 12;
  plates(std::max(2, knee_end - 8 - knee_pitch * s.knee_bars), s.knee_bars, 6, knee_pitch);
  plates(foot_start + 6, s.foot_bars, 6, 14);

  // Soft-tissue folds: short dark streaks between the skin line and the shafts.
  for (int k = 0; k < s.flesh_folds; ++k) {
    const bool left_side = rng.uniform() < 0.5;
    const double y = rng.uniform(b_top + 10.0, b_bottom - 10.0);
    const double lo = left_side ? s.flesh_left * w + 8.0 : shaft_centre(s, s.fibula_x, y) + s.fibula_half * w + 6.0;
    const double hi = left_side ? shaft_centre(s, s.tibia_x, y) - s.tibia_half * w - 6.0 : s.flesh_right * w - 8.0;
    if (hi - lo < 8.0) continue;
    const double len = rng.uniform(8.0, std::min(22.0, hi - lo));
    const double x0 = rng.uniform(lo, hi - len);
    const double angle = rng.uniform(-0.7, 0.7);
    const double thick = rng.uniform(1.5, 2.8);
    const double depth = rng.uniform(25.0, 45.0);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int yy = std::max(0, static_cast<int>(y - len)); yy <= std::min(h - 1, static_cast<int>(y + len)); ++yy) {
      for (int xx = std::max(0, static_cast<int>(x0 - 2)); xx <= std::min(w - 1, static_cast<int>(x0 + len + 2)); ++xx) {
        const double u = (xx - x0) * ca + (yy - y) * sa;
        const double v = -(xx - x0) * sa + (yy - y) * ca;
        if (u < 0.0 || u > len) continue;
        const double fall = 1.0 - smoothstep(thick * 0.5, thick * 0.5 + 1.0, std::abs(v));
        px(xx, yy) -= depth * fall;
      }
    }
  }

  SyntheticImage out;
  out.knee_end = knee_end;
  out.foot_start = foot_start;
  if (s.fracture) {
    int x_min = w;
    int x_max = -1;
    int y_min = h;
    int y_max = -1;
    for (const auto& c : cracks(s)) {
      for (int x = 0; x < w; ++x) {
        for (int r : rows_of(s, c, x)) {
          if (r < 0 || r >= h) continue;
          px(x, r) = kCrack;
          x_min = std::min(x_min, x);
          x_max = std::max(x_max, x);
          y_min = std::min(y_min, r);
          y_max = std::max(y_max, r);
        }
      }
    }
    if (x_max >= 0) {
      constexpr int pad = 6;
      out.fracture_rects.push_back(
          {std::max(0, x_min - pad), std::max(0, y_min - pad), std::min(w, x_max + pad), std::min(h, y_max + pad)});
    }
  }

  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y) = round_clamp(px(x, y) + s.noise_sigma * rng.normal());
    }
  }
  out.image = std::move(img);
  return out;
}

std::vector<CorpusEntry> write_synthetic_corpus(const std::filesystem::path& dir, int n_images, int n_fractured,
                                                std::uint64_t seed, int width, int height) {
  if (n_images < 0 || n_fractured < 0 || n_fractured > n_images) {
    throw Error(ErrorCode::Config, "need 0 <= fractured <= images");
  }
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");

  std::vector<int> order(static_cast<std::size_t>(n_images));
  for (int i = 0; i < n_images; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, {0xc0}));
  rng.shuffle(order);
  std::vector<bool> fractured(static_cast<std::size_t>(n_images), false);
  for (int k = 0; k < n_fractured; ++k) fractured[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

  std::vector<CorpusEntry> entries;
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.csv").string());
  manifest << "image_id,fractured,seed,width,height,knee_end,foot_start,rects\n";
  for (int i = 0; i < n_images; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03d", i);
    CorpusEntry e{id, fractured[static_cast<std::size_t>(i)], derive_seed(seed, {0x1a, static_cast<std::uint64_t>(i)})};
    const auto spec = random_spec(e.seed, e.fractured, width, height);
    const auto synth = generate_synthetic(spec);
    write_png(dir / "images" / (e.image_id + ".png"), synth.image);

    LabelDocument doc;
    doc.image_id = e.image_id;
    for (const auto& r : synth.fracture_rects) doc.apply({EventKind::AddRect, r, 0, std::nullopt});
    save_label_document(doc, dir / "labels" / (e.image_id + ".json"));

    manifest << e.image_id << ',' << (e.fractured ? 1 : 0) << ',' << e.seed << ',' << width << ',' << height << ','
             << synth.knee_end << ',' << synth.foot_start << ',' << synth.fracture_rects.size() << '\n';
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace chfb
