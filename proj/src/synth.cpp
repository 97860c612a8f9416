#include "rinr/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace rinr {

namespace {

constexpr double kTau = 6.28318530717958647692;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Mover {
  double x, y, vx, vy;
  void step(double w, double h, double margin) {
    x += vx;
    y += vy;
    if (x < margin || x > w - margin) {
      vx = -vx;
      x = std::clamp(x, margin, w - margin);
    }
    if (y < margin || y > h - margin) {
      vy = -vy;
      y = std::clamp(y, margin, h - margin);
    }
  }
};

// Smooth low-frequency background shared by the object-based kinds; gives
// the frame real content at every spatial frequency band.
void paint_background(std::vector<float>& img, int h, int w,
                      const double base[3], const double gx[3],
                      const double gy[3], const double amp[3],
                      const double ph[3], double t) {
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = double(x) / w, v = double(y) / h;
        double val = base[c] + gx[c] * u + gy[c] * v +
                     amp[c] * std::sin(kTau * (0.7 * u + 0.4 * v) +
                                       ph[c] + 0.21 * t);
        img[(std::size_t(c) * h + y) * w + x] =
            float(std::clamp(val, 0.0, 1.0));
      }
    }
  }
}

FrameSequence make_rects(int frame_count, int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  auto u = [&rng](double lo, double hi) {
    return lo + (hi - lo) * canonical_uniform(rng);
  };
  double base[3], gx[3], gy[3], amp[3], ph[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = u(0.3, 0.5);
    gx[c] = u(-0.25, 0.25);
    gy[c] = u(-0.25, 0.25);
    amp[c] = u(0.03, 0.08);
    ph[c] = u(0.0, kTau);
  }
  constexpr int kCount = 3;
  Mover m[kCount];
  double rw[kCount], rh[kCount], color[kCount][3];
  for (int i = 0; i < kCount; ++i) {
    rw[i] = u(0.12, 0.3) * w;
    rh[i] = u(0.15, 0.4) * h;
    m[i] = {u(0.25, 0.75) * w, u(0.25, 0.75) * h, u(-0.035, 0.035) * w,
            u(-0.035, 0.035) * h};
    for (int c = 0; c < 3; ++c) color[i][c] = u(0.1, 0.9);
  }

  FrameSequence seq;
  seq.source_id = "rects-" + std::to_string(seed);
  for (int t = 0; t < frame_count; ++t) {
    std::vector<float> img(std::size_t(3) * h * w);
    paint_background(img, h, w, base, gx, gy, amp, ph, t);
    for (int i = 0; i < kCount; ++i) {
      for (int y = 0; y < h; ++y) {
        const double dy =
            smoothstep(rh[i] / 2 + 1.2, rh[i] / 2 - 1.2, std::abs(y - m[i].y));
        if (dy <= 0.0) continue;
        for (int x = 0; x < w; ++x) {
          const double dx = smoothstep(rw[i] / 2 + 1.2, rw[i] / 2 - 1.2,
                                       std::abs(x - m[i].x));
          const double a = dx * dy;
          if (a <= 0.0) continue;
          for (int c = 0; c < 3; ++c) {
            float& px = img[(std::size_t(c) * h + y) * w + x];
            px = float((1.0 - a) * px + a * color[i][c]);
          }
        }
      }
      m[i].step(w, h, 2.0);
    }
    seq.frames.push_back(Tensor<float>::from_data({1, 3, h, w}, std::move(img)));
  }
  return seq;
}

FrameSequence make_balls(int frame_count, int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  auto u = [&rng](double lo, double hi) {
    return lo + (hi - lo) * canonical_uniform(rng);
  };
  double base[3], gx[3], gy[3], amp[3], ph[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = u(0.35, 0.55);
    gx[c] = u(-0.2, 0.2);
    gy[c] = u(-0.2, 0.2);
    amp[c] = u(0.02, 0.06);
    ph[c] = u(0.0, kTau);
  }
  constexpr int kCount = 3;
  Mover m[kCount];
  double radius[kCount], tex_freq[kCount], color[kCount][3];
  for (int i = 0; i < kCount; ++i) {
    radius[i] = u(0.1, 0.22) * std::min(h, w);
    tex_freq[i] = u(0.25, 0.7);
    m[i] = {u(0.3, 0.7) * w, u(0.3, 0.7) * h, u(-0.03, 0.03) * w,
            u(-0.03, 0.03) * h};
    for (int c = 0; c < 3; ++c) color[i][c] = u(0.15, 0.85);
  }

  FrameSequence seq;
  seq.source_id = "balls-" + std::to_string(seed);
  for (int t = 0; t < frame_count; ++t) {
    std::vector<float> img(std::size_t(3) * h * w);
    paint_background(img, h, w, base, gx, gy, amp, ph, t);
    for (int i = 0; i < kCount; ++i) {
      const int y0 = std::max(0, int(m[i].y - radius[i] - 2));
      const int y1 = std::min(h - 1, int(m[i].y + radius[i] + 2));
      const int x0 = std::max(0, int(m[i].x - radius[i] - 2));
      const int x1 = std::min(w - 1, int(m[i].x + radius[i] + 2));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x - m[i].x, dy = y - m[i].y;
          const double r = std::sqrt(dx * dx + dy * dy);
          const double a = smoothstep(radius[i] + 1.2, radius[i] - 1.2, r);
          if (a <= 0.0) continue;
          // Radial rings give the ball high-frequency texture.
          const double tex = 0.5 + 0.3 * std::sin(tex_freq[i] * r * kTau / 4.0);
          for (int c = 0; c < 3; ++c) {
            float& px = img[(std::size_t(c) * h + y) * w + x];
            const double v = std::clamp(color[i][c] * tex + 0.15, 0.0, 1.0);
            px = float((1.0 - a) * px + a * v);
          }
        }
      }
      m[i].step(w, h, 2.0);
    }
    seq.frames.push_back(Tensor<float>::from_data({1, 3, h, w}, std::move(img)));
  }
  return seq;
}

// Two drifting gratings per channel with whole numbers of cycles across the
// frame, so every frame's mean is exactly 0.5 (the sinusoids sum to zero
// over the pixel grid).
FrameSequence make_gratings(int frame_count, int h, int w,
                            std::uint32_t seed) {
  std::mt19937 rng(seed);
  auto u = [&rng](double lo, double hi) {
    return lo + (hi - lo) * canonical_uniform(rng);
  };
  auto cycles = [&rng](int lo, int hi) {
    return lo + int(rng() % std::uint32_t(hi - lo + 1));
  };
  int kx1[3], ky1[3], kx2[3], ky2[3];
  double ph1[3], ph2[3], om1[3], om2[3];
  for (int c = 0; c < 3; ++c) {
    kx1[c] = cycles(1, 4);
    ky1[c] = cycles(0, 3);
    kx2[c] = cycles(2, 7);
    ky2[c] = cycles(1, 5);
    ph1[c] = u(0.0, kTau);
    ph2[c] = u(0.0, kTau);
    om1[c] = u(0.1, 0.4);
    om2[c] = u(-0.4, -0.1);
  }
  FrameSequence seq;
  seq.source_id = "gratings-" + std::to_string(seed);
  for (int t = 0; t < frame_count; ++t) {
    std::vector<float> img(std::size_t(3) * h * w);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double u1 = kTau * (kx1[c] * (x + 0.5) / w +
                                    ky1[c] * (y + 0.5) / h);
          const double u2 = kTau * (kx2[c] * (x + 0.5) / w +
                                    ky2[c] * (y + 0.5) / h);
          const double v = 0.5 + 0.2 * std::sin(u1 + ph1[c] + om1[c] * t) +
                           0.1 * std::sin(u2 + ph2[c] + om2[c] * t);
          img[(std::size_t(c) * h + y) * w + x] = float(v);
        }
      }
    }
    seq.frames.push_back(Tensor<float>::from_data({1, 3, h, w}, std::move(img)));
  }
  return seq;
}

}  // namespace

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "rects") return SynthKind::rects;
  if (s == "balls") return SynthKind::balls;
  if (s == "gratings") return SynthKind::gratings;
  throw std::invalid_argument("unknown synth kind '" + s +
                              "' (rects, balls, gratings)");
}

const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::rects:
      return "rects";
    case SynthKind::balls:
      return "balls";
    default:
      return "gratings";
  }
}

FrameSequence make_sequence(SynthKind kind, int frame_count, int height,
                            int width, std::uint32_t seed) {
  if (frame_count < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("make_sequence: bad dims/frame count");
  }
  switch (kind) {
    case SynthKind::rects:
      return make_rects(frame_count, height, width, seed);
    case SynthKind::balls:
      return make_balls(frame_count, height, width, seed);
    default:
      return make_gratings(frame_count, height, width, seed);
  }
}

}  // namespace rinr
