// Compares the OpenMP kernels against the serial reference on
// training-shaped workloads and prints per-kernel timings and speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rinr/kernels.hpp"
#include "rinr/reference.hpp"
#include "rinr/tensor.hpp"

namespace {

using Clock = std::chrono::steady_clock;

std::vector<float> random_vec(std::size_t n, std::mt19937& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(rinr::canonical_uniform(rng)) - 0.5f;
  return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %.2fx\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::mt19937 rng(7);
  const int reps = 5;
#ifdef _OPENMP
  std::printf("threads: %d\n", rinr::kernels::effective_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  {  // conv2d on an encoder-shaped workload: (1,32,64,128) -> (1,32,32,64)
    rinr::Shape in_s{1, 32, 64, 128}, w_s{32, 32, 3, 3};
    const auto d = rinr::kernels::Conv2dDims::infer(in_s, w_s, 2, 1);
    const auto in = random_vec(std::size_t(in_s.numel()), rng);
    const auto w = random_vec(std::size_t(w_s.numel()), rng);
    const auto b = random_vec(32, rng);
    std::vector<float> out(std::size_t(d.out_numel()));
    report("conv2d forward",
           time_ms([&] { rinr::reference::conv2d_forward(in.data(), w.data(),
                                                         b.data(), out.data(),
                                                         d); },
                   reps),
           time_ms([&] { rinr::kernels::conv2d_forward(in.data(), w.data(),
                                                       b.data(), out.data(),
                                                       d); },
                   reps));

    std::vector<float> gin(in.size());
    report("conv2d backward (input)",
           time_ms([&] { rinr::reference::conv2d_backward_input(
                             out.data(), w.data(), gin.data(), d); },
                   reps),
           time_ms([&] { rinr::kernels::conv2d_backward_input(
                             out.data(), w.data(), gin.data(), d); },
                   reps));

    std::vector<float> gw(w.size());
    report("conv2d backward (weight)",
           time_ms([&] { rinr::reference::conv2d_backward_weight(
                             out.data(), in.data(), gw.data(), d); },
                   reps),
           time_ms([&] { rinr::kernels::conv2d_backward_weight(
                             out.data(), in.data(), gw.data(), d); },
                   reps));
  }

  {  // pixel shuffle on a decoder-shaped workload: (1,64,32,64) r=2
    const int n = 1, c_out = 16, h = 32, w = 64, r = 2;
    const auto in = random_vec(std::size_t(c_out) * r * r * h * w, rng);
    std::vector<float> out(in.size());
    report("pixel_shuffle",
           time_ms([&] { rinr::reference::pixel_shuffle(in.data(), out.data(),
                                                        n, c_out, h, w, r); },
                   reps),
           time_ms([&] { rinr::kernels::pixel_shuffle(in.data(), out.data(),
                                                      n, c_out, h, w, r); },
                   reps));
  }

  {  // box downsample + bicubic upscale on a 512x512 frame
    const int ch = 3, h = 512, w = 512, n = 8;
    const auto in = random_vec(std::size_t(ch) * h * w, rng);
    std::vector<float> small(std::size_t(ch) * (h / n) * (w / n));
    report("box_downsample",
           time_ms([&] { rinr::reference::box_downsample(in.data(),
                                                         small.data(), ch, h,
                                                         w, n); },
                   reps),
           time_ms([&] { rinr::kernels::box_downsample(in.data(), small.data(),
                                                       ch, h, w, n); },
                   reps));
    std::vector<float> up(std::size_t(ch) * h * w);
    report("bicubic_upscale",
           time_ms([&] { rinr::reference::bicubic_upscale(small.data(),
                                                          up.data(), ch, h / n,
                                                          w / n, n); },
                   reps),
           time_ms([&] { rinr::kernels::bicubic_upscale(small.data(),
                                                        up.data(), ch, h / n,
                                                        w / n, n); },
                   reps));
  }
  return 0;
}
