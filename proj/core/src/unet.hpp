#pragma once

// Private to the toy denoiser: a fixed-topology U-Net with hand-written backward.

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "enhancekit/random.hpp"
#include "enhancekit/toy_denoiser.hpp"

namespace enhancekit::detail {

// channels x pixels, column-major: the memory layout equals interleaved HWC.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Slice {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct Conv3x3 {
  int cin = 0;
  int cout = 0;
  Slice weight;  // cout x (9 * cin), column index = tap * cin + ci
  Slice bias;
};

struct Dense {
  int in = 0;
  int out = 0;
  Slice weight;  // out x in, row-major
  Slice bias;
};

struct ResBlock {
  int channels = 0;
  Conv3x3 conv1;
  Conv3x3 conv2;
  Dense time_proj;
};

struct ResTrace {
  Mat input;
  Mat col1;
  Mat pre1;
  Mat col2;
};

struct Trace {
  int height = 0;
  int width = 0;
  int label_slot = 0;
  // embedding path
  Vec sinusoid, pre_a1, a1_act, emb, emb_act;
  // main path
  Mat col_in;
  ResTrace res0a;
  Mat col_d1;
  ResTrace res1a;
  Mat col_d2;
  ResTrace res2a, res2b;
  Mat col_u1;
  ResTrace res1b;
  Mat col_u0;
  ResTrace res0b;
  Mat u0;
  Mat col_out;
};

class UNet {
 public:
  explicit UNet(const ToyArchitecture& arch);

  std::size_t parameter_count() const { return total_; }
  void initialise(std::vector<float>& params, RandomSource& rng) const;
  void load(const std::vector<float>& params);

  // x: in_channels x (H*W). Fills `trace` when non-null.
  Mat forward(const Mat& x, int height, int width, int t, int label_slot, Trace* trace) const;
  // Returns d/dx of <dout, forward(x)>. Accumulates parameter gradients into
  // `grads` (same layout as the parameters) when non-null.
  Mat backward(const Mat& dout, const Trace& trace, double* grads) const;

  int null_label_slot() const { return arch_.num_classes; }

 private:
  Slice allocate(std::size_t n);
  Conv3x3 make_conv(int cin, int cout);
  Dense make_dense(int in, int out);
  ResBlock make_res(int channels);

  Mat conv_forward(const Conv3x3& conv, const Mat& x, int h, int w, Mat* col_cache) const;
  Mat conv_backward(const Conv3x3& conv, const Mat& dy, const Mat& col, int h, int w, double* grads) const;
  Mat res_forward(const ResBlock& block, const Mat& x, const Vec& emb_act, int h, int w, ResTrace* trace) const;
  Mat res_backward(const ResBlock& block, const Mat& dy, const ResTrace& trace, const Vec& emb_act, int h, int w,
                   double* grads, Vec* d_emb_act) const;
  Vec dense_forward(const Dense& d, const Vec& x) const;

  ToyArchitecture arch_;
  std::size_t total_ = 0;
  std::vector<double> w_;

  Dense embed1_, embed2_;
  Slice label_table_;
  Conv3x3 conv_in_;
  ResBlock res0a_;
  Conv3x3 down1_;
  ResBlock res1a_;
  Conv3x3 down2_;
  ResBlock res2a_, res2b_;
  Conv3x3 up1_;
  ResBlock res1b_;
  Conv3x3 up0_;
  ResBlock res0b_;
  Conv3x3 conv_out_;
  std::vector<Slice> zero_init_;
};

}  // namespace enhancekit::detail
