#include "rinr/metrics.hpp"

#include <cstdio>
#include <numeric>

namespace rinr {
namespace detail_msssim {

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  const int mid = kWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = double(i - mid);
    g[std::size_t(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[std::size_t(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

Plane blur(const Plane& p) {
  static const std::vector<double> g = gaussian_window();
  Plane tmp;
  tmp.h = p.h;
  tmp.w = p.w - kWindow + 1;
  tmp.v.resize(std::size_t(tmp.h) * tmp.w);
  for (int y = 0; y < tmp.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) {
        acc += g[std::size_t(k)] * p.v[std::size_t(y) * p.w + x + k];
      }
      tmp.v[std::size_t(y) * tmp.w + x] = acc;
    }
  }
  Plane out;
  out.h = p.h - kWindow + 1;
  out.w = tmp.w;
  out.v.resize(std::size_t(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) {
        acc += g[std::size_t(k)] * tmp.v[std::size_t(y + k) * tmp.w + x];
      }
      out.v[std::size_t(y) * out.w + x] = acc;
    }
  }
  return out;
}

Plane avg_pool2(const Plane& p) {
  Plane out;
  out.h = p.h / 2;
  out.w = p.w / 2;
  out.v.resize(std::size_t(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      const double* r0 = p.v.data() + std::size_t(2 * y) * p.w + 2 * x;
      const double* r1 = r0 + p.w;
      out.v[std::size_t(y) * out.w + x] = (r0[0] + r0[1] + r1[0] + r1[1]) * 0.25;
    }
  }
  return out;
}

SsimTerms ssim_terms(const Plane& a, const Plane& b, double peak) {
  const double c1 = (kK1 * peak) * (kK1 * peak);
  const double c2 = (kK2 * peak) * (kK2 * peak);

  Plane aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }
  const Plane mu_a = blur(a);
  const Plane mu_b = blur(b);
  const Plane m_aa = blur(aa);
  const Plane m_bb = blur(bb);
  const Plane m_ab = blur(ab);

  double ssim = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = m_aa.v[i] - ma * ma;
    const double vb = m_bb.v[i] - mb * mb;
    const double cov = m_ab.v[i] - ma * mb;
    const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    const double c = (2.0 * cov + c2) / (va + vb + c2);
    ssim += l * c;
    cs += c;
  }
  SsimTerms t;
  t.ssim = ssim / double(mu_a.v.size());
  t.cs = cs / double(mu_a.v.size());
  return t;
}

int feasible_scales(int h, int w) {
  const int min_dim = std::min(h, w);
  int s = 0;
  while (s < 5 && min_dim >= kWindow * (1 << s)) ++s;
  return s;
}

}  // namespace detail_msssim

MetricReport make_report(std::string video_id, std::vector<FrameMetrics> frames,
                         double bpp) {
  MetricReport r;
  r.video_id = std::move(video_id);
  r.frames = std::move(frames);
  r.bpp = bpp;
  if (!r.frames.empty()) {
    double ps = 0.0, ss = 0.0;
    for (const auto& f : r.frames) {
      ps += f.psnr_db;
      ss += f.ms_ssim;
    }
    r.mean_psnr_db = ps / double(r.frames.size());
    r.mean_ms_ssim = ss / double(r.frames.size());
  }
  return r;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_metric_csv(std::ostream& out, const MetricReport& report) {
  out << "video_id,frame_idx,psnr_db,ms_ssim\n";
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    out << report.video_id << ',' << i << ','
        << format_metric(report.frames[i].psnr_db) << ','
        << format_metric(report.frames[i].ms_ssim) << '\n';
  }
  out << report.video_id << ",mean," << format_metric(report.mean_psnr_db)
      << ',' << format_metric(report.mean_ms_ssim) << '\n';
}

}  // namespace rinr
