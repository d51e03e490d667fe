#include "unet.hpp"

#include <cmath>

#include "enhancekit/errors.hpp"

namespace enhancekit::detail {
namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMat>;
using GradMap = Eigen::Map<RowMajorMat>;

Mat im2col(const Mat& x, int h, int w) {
  const int cin = static_cast<int>(x.rows());
  Mat col = Mat::Zero(9 * cin, static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int p = y * w + xx;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = xx + kx - 1;
          if (sx < 0 || sx >= w) continue;
          col.col(p).segment((ky * 3 + kx) * cin, cin) = x.col(sy * w + sx);
        }
      }
    }
  }
  return col;
}

Mat col2im(const Mat& col, int cin, int h, int w) {
  Mat x = Mat::Zero(cin, static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int p = y * w + xx;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = xx + kx - 1;
          if (sx < 0 || sx >= w) continue;
          x.col(sy * w + sx) += col.col(p).segment((ky * 3 + kx) * cin, cin);
        }
      }
    }
  }
  return x;
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& a) {
  return (1.0 + (-a).exp()).inverse();
}

Mat silu(const Mat& x) { return (x.array() * sigmoid(x.array())).matrix(); }
Vec silu(const Vec& x) { return (x.array() * sigmoid(x.array())).matrix(); }

// d silu(x) / dx = s (1 + x (1 - s))
Mat silu_backward(const Mat& dy, const Mat& x) {
  const Eigen::ArrayXXd s = sigmoid(x.array());
  return (dy.array() * s * (1.0 + x.array() * (1.0 - s))).matrix();
}
Vec silu_backward(const Vec& dy, const Vec& x) {
  const Eigen::ArrayXd s = sigmoid(x.array());
  return (dy.array() * s * (1.0 + x.array() * (1.0 - s))).matrix();
}

Mat avg_pool(const Mat& x, int h, int w) {
  const int ho = h / 2, wo = w / 2;
  Mat out = Mat::Zero(x.rows(), static_cast<Eigen::Index>(ho) * wo);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) out.col((y / 2) * wo + xx / 2) += 0.25 * x.col(y * w + xx);
  }
  return out;
}

Mat avg_pool_backward(const Mat& dy, int h, int w) {
  const int wo = w / 2;
  Mat dx(dy.rows(), static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) dx.col(y * w + xx) = 0.25 * dy.col((y / 2) * wo + xx / 2);
  }
  return dx;
}

// Nearest-neighbour 2x upsampling of an h x w map.
Mat upsample(const Mat& x, int h, int w) {
  const int wo = 2 * w;
  Mat out(x.rows(), static_cast<Eigen::Index>(4) * h * w);
  for (int y = 0; y < 2 * h; ++y) {
    for (int xx = 0; xx < wo; ++xx) out.col(y * wo + xx) = x.col((y / 2) * w + xx / 2);
  }
  return out;
}

Mat upsample_backward(const Mat& dy, int h, int w) {
  const int wo = 2 * w;
  Mat dx = Mat::Zero(dy.rows(), static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < 2 * h; ++y) {
    for (int xx = 0; xx < wo; ++xx) dx.col((y / 2) * w + xx / 2) += dy.col(y * wo + xx);
  }
  return dx;
}

Vec sinusoidal_embedding(int t, int dim) {
  const int half = dim / 2;
  Vec out(dim);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    out[k] = std::sin(t * freq);
    out[half + k] = std::cos(t * freq);
  }
  return out;
}

}  // namespace

UNet::UNet(const ToyArchitecture& arch) : arch_(arch) {
  if (arch.in_channels < 1 || arch.base_channels < 1 || arch.embed_dim < 2 || arch.embed_dim % 2 != 0 ||
      arch.num_classes < 0) {
    throw ContractError("invalid toy denoiser architecture");
  }
  const int c = arch.base_channels;
  const int e = arch.embed_dim;
  embed1_ = make_dense(e / 2, e);
  embed2_ = make_dense(e, e);
  label_table_ = allocate(static_cast<std::size_t>(arch.num_classes + 1) * e);
  conv_in_ = make_conv(arch.in_channels, c);
  res0a_ = make_res(c);
  down1_ = make_conv(c, 2 * c);
  res1a_ = make_res(2 * c);
  down2_ = make_conv(2 * c, 2 * c);
  res2a_ = make_res(2 * c);
  res2b_ = make_res(2 * c);
  up1_ = make_conv(2 * c, 2 * c);
  res1b_ = make_res(2 * c);
  up0_ = make_conv(2 * c, c);
  res0b_ = make_res(c);
  conv_out_ = make_conv(c, arch.in_channels);
  zero_init_ = {conv_out_.weight, conv_out_.bias};
  w_.assign(total_, 0.0);
}

Slice UNet::allocate(std::size_t n) {
  Slice s{total_, n};
  total_ += n;
  return s;
}

Conv3x3 UNet::make_conv(int cin, int cout) {
  Conv3x3 conv{cin, cout, {}, {}};
  conv.weight = allocate(static_cast<std::size_t>(9) * cin * cout);
  conv.bias = allocate(cout);
  return conv;
}

Dense UNet::make_dense(int in, int out) {
  Dense d{in, out, {}, {}};
  d.weight = allocate(static_cast<std::size_t>(in) * out);
  d.bias = allocate(out);
  return d;
}

ResBlock UNet::make_res(int channels) {
  ResBlock b;
  b.channels = channels;
  b.conv1 = make_conv(channels, channels);
  b.conv2 = make_conv(channels, channels);
  b.time_proj = make_dense(arch_.embed_dim, channels);
  return b;
}

void UNet::initialise(std::vector<float>& params, RandomSource& rng) const {
  params.assign(total_, 0.0f);
  auto fill_uniform = [&](const Slice& s, double bound) {
    for (std::size_t i = 0; i < s.size; ++i) {
      params[s.offset + i] = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
    }
  };
  auto conv = [&](const Conv3x3& cv) {
    const double bound = 1.0 / std::sqrt(9.0 * cv.cin);
    fill_uniform(cv.weight, bound);
    fill_uniform(cv.bias, bound);
  };
  auto dense = [&](const Dense& d) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
    fill_uniform(d.weight, bound);
    fill_uniform(d.bias, bound);
  };
  auto res = [&](const ResBlock& b) {
    conv(b.conv1);
    conv(b.conv2);
    dense(b.time_proj);
  };
  dense(embed1_);
  dense(embed2_);
  for (std::size_t i = 0; i < label_table_.size; ++i) {
    params[label_table_.offset + i] = static_cast<float>(0.1 * rng.normal());
  }
  conv(conv_in_);
  res(res0a_);
  conv(down1_);
  res(res1a_);
  conv(down2_);
  res(res2a_);
  res(res2b_);
  conv(up1_);
  res(res1b_);
  conv(up0_);
  res(res0b_);
  for (const Slice& s : zero_init_) {
    for (std::size_t i = 0; i < s.size; ++i) params[s.offset + i] = 0.0f;
  }
}

void UNet::load(const std::vector<float>& params) {
  if (params.size() != total_) {
    throw ContractError("toy denoiser expects " + std::to_string(total_) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < total_; ++i) w_[i] = params[i];
}

Mat UNet::conv_forward(const Conv3x3& conv, const Mat& x, int h, int w, Mat* col_cache) const {
  Mat col = im2col(x, h, w);
  const ConstMap weight(w_.data() + conv.weight.offset, conv.cout, 9 * conv.cin);
  const Eigen::Map<const Vec> bias(w_.data() + conv.bias.offset, conv.cout);
  Mat out = weight * col;
  out.colwise() += bias;
  if (col_cache) *col_cache = std::move(col);
  return out;
}

Mat UNet::conv_backward(const Conv3x3& conv, const Mat& dy, const Mat& col, int h, int w, double* grads) const {
  const ConstMap weight(w_.data() + conv.weight.offset, conv.cout, 9 * conv.cin);
  if (grads) {
    GradMap gw(grads + conv.weight.offset, conv.cout, 9 * conv.cin);
    gw.noalias() += dy * col.transpose();
    Eigen::Map<Vec> gb(grads + conv.bias.offset, conv.cout);
    gb += dy.rowwise().sum();
  }
  const Mat dcol = weight.transpose() * dy;
  return col2im(dcol, conv.cin, h, w);
}

Vec UNet::dense_forward(const Dense& d, const Vec& x) const {
  const ConstMap weight(w_.data() + d.weight.offset, d.out, d.in);
  const Eigen::Map<const Vec> bias(w_.data() + d.bias.offset, d.out);
  return weight * x + bias;
}

Mat UNet::res_forward(const ResBlock& block, const Mat& x, const Vec& emb_act, int h, int w, ResTrace* trace) const {
  Mat col1, col2;
  Mat pre1 = conv_forward(block.conv1, silu(x), h, w, trace ? &col1 : nullptr);
  pre1.colwise() += dense_forward(block.time_proj, emb_act);
  Mat out = x + conv_forward(block.conv2, silu(pre1), h, w, trace ? &col2 : nullptr);
  if (trace) {
    trace->input = x;
    trace->col1 = std::move(col1);
    trace->pre1 = std::move(pre1);
    trace->col2 = std::move(col2);
  }
  return out;
}

Mat UNet::res_backward(const ResBlock& block, const Mat& dy, const ResTrace& trace, const Vec& emb_act, int h,
                       int w, double* grads, Vec* d_emb_act) const {
  const Mat d_act1 = conv_backward(block.conv2, dy, trace.col2, h, w, grads);
  const Mat d_pre1 = silu_backward(d_act1, trace.pre1);
  if (grads) {
    const Vec d_proj = d_pre1.rowwise().sum();
    GradMap gw(grads + block.time_proj.weight.offset, block.time_proj.out, block.time_proj.in);
    gw.noalias() += d_proj * emb_act.transpose();
    Eigen::Map<Vec>(grads + block.time_proj.bias.offset, block.time_proj.out) += d_proj;
    const ConstMap weight(w_.data() + block.time_proj.weight.offset, block.time_proj.out, block.time_proj.in);
    *d_emb_act += weight.transpose() * d_proj;
  }
  const Mat d_act0 = conv_backward(block.conv1, d_pre1, trace.col1, h, w, grads);
  return dy + silu_backward(d_act0, trace.input);
}

Mat UNet::forward(const Mat& x, int height, int width, int t, int label_slot, Trace* trace) const {
  if (x.rows() != arch_.in_channels || x.cols() != static_cast<Eigen::Index>(height) * width) {
    throw ContractError("toy denoiser input has the wrong shape");
  }
  if (height % 4 != 0 || width % 4 != 0) {
    throw ContractError("toy denoiser needs height and width divisible by 4");
  }
  if (label_slot < 0 || label_slot > arch_.num_classes) throw ContractError("label outside the embedding table");
  const int h0 = height, w0 = width, h1 = h0 / 2, w1 = w0 / 2, h2 = h1 / 2, w2 = w1 / 2;

  const Vec sin_emb = sinusoidal_embedding(t, arch_.embed_dim);
  const Vec pre_a1 = dense_forward(embed1_, sin_emb.head(arch_.embed_dim / 2));
  const Vec a1 = silu(pre_a1);
  Vec emb = dense_forward(embed2_, a1);
  emb += Eigen::Map<const Vec>(w_.data() + label_table_.offset + static_cast<std::size_t>(label_slot) * arch_.embed_dim,
                               arch_.embed_dim);
  const Vec e = silu(emb);

  ResTrace* no = nullptr;
  auto rt = [&](ResTrace& r) { return trace ? &r : no; };
  auto ct = [&](Mat& m) { return trace ? &m : nullptr; };
  Trace dummy;
  Trace& tr = trace ? *trace : dummy;

  const Mat h0a = conv_forward(conv_in_, x, h0, w0, ct(tr.col_in));
  const Mat h0v = res_forward(res0a_, h0a, e, h0, w0, rt(tr.res0a));
  const Mat d1 = conv_forward(down1_, avg_pool(h0v, h0, w0), h1, w1, ct(tr.col_d1));
  const Mat h1v = res_forward(res1a_, d1, e, h1, w1, rt(tr.res1a));
  const Mat d2 = conv_forward(down2_, avg_pool(h1v, h1, w1), h2, w2, ct(tr.col_d2));
  const Mat h2a = res_forward(res2a_, d2, e, h2, w2, rt(tr.res2a));
  const Mat h2v = res_forward(res2b_, h2a, e, h2, w2, rt(tr.res2b));
  const Mat u1a = conv_forward(up1_, upsample(h2v, h2, w2), h1, w1, ct(tr.col_u1)) + h1v;
  const Mat u1 = res_forward(res1b_, u1a, e, h1, w1, rt(tr.res1b));
  const Mat u0a = conv_forward(up0_, upsample(u1, h1, w1), h0, w0, ct(tr.col_u0)) + h0v;
  Mat u0 = res_forward(res0b_, u0a, e, h0, w0, rt(tr.res0b));
  Mat out = conv_forward(conv_out_, silu(u0), h0, w0, ct(tr.col_out));

  if (trace) {
    tr.height = height;
    tr.width = width;
    tr.label_slot = label_slot;
    tr.sinusoid = sin_emb;
    tr.pre_a1 = pre_a1;
    tr.a1_act = a1;
    tr.emb = emb;
    tr.emb_act = e;
    tr.u0 = std::move(u0);
  }
  return out;
}

Mat UNet::backward(const Mat& dout, const Trace& tr, double* grads) const {
  const int h0 = tr.height, w0 = tr.width, h1 = h0 / 2, w1 = w0 / 2, h2 = h1 / 2, w2 = w1 / 2;
  const Vec& e = tr.emb_act;
  Vec de = Vec::Zero(arch_.embed_dim);

  const Mat du0 = silu_backward(conv_backward(conv_out_, dout, tr.col_out, h0, w0, grads), tr.u0);
  const Mat du0a = res_backward(res0b_, du0, tr.res0b, e, h0, w0, grads, &de);
  Mat dh0 = du0a;
  const Mat du1 = upsample_backward(conv_backward(up0_, du0a, tr.col_u0, h0, w0, grads), h1, w1);
  const Mat du1a = res_backward(res1b_, du1, tr.res1b, e, h1, w1, grads, &de);
  Mat dh1 = du1a;
  const Mat dh2 = upsample_backward(conv_backward(up1_, du1a, tr.col_u1, h1, w1, grads), h2, w2);
  const Mat dh2a = res_backward(res2b_, dh2, tr.res2b, e, h2, w2, grads, &de);
  const Mat dd2 = res_backward(res2a_, dh2a, tr.res2a, e, h2, w2, grads, &de);
  dh1 += avg_pool_backward(conv_backward(down2_, dd2, tr.col_d2, h2, w2, grads), h1, w1);
  const Mat dd1 = res_backward(res1a_, dh1, tr.res1a, e, h1, w1, grads, &de);
  dh0 += avg_pool_backward(conv_backward(down1_, dd1, tr.col_d1, h1, w1, grads), h0, w0);
  const Mat dh0a = res_backward(res0a_, dh0, tr.res0a, e, h0, w0, grads, &de);
  Mat dx = conv_backward(conv_in_, dh0a, tr.col_in, h0, w0, grads);

  if (grads) {
    const Vec demb = silu_backward(de, tr.emb);
    Eigen::Map<Vec>(grads + label_table_.offset + static_cast<std::size_t>(tr.label_slot) * arch_.embed_dim,
                    arch_.embed_dim) += demb;
    GradMap g2(grads + embed2_.weight.offset, embed2_.out, embed2_.in);
    g2.noalias() += demb * tr.a1_act.transpose();
    Eigen::Map<Vec>(grads + embed2_.bias.offset, embed2_.out) += demb;
    const ConstMap w2m(w_.data() + embed2_.weight.offset, embed2_.out, embed2_.in);
    const Vec da1 = silu_backward(Vec(w2m.transpose() * demb), tr.pre_a1);
    GradMap g1(grads + embed1_.weight.offset, embed1_.out, embed1_.in);
    g1.noalias() += da1 * tr.sinusoid.head(arch_.embed_dim / 2).transpose();
    Eigen::Map<Vec>(grads + embed1_.bias.offset, embed1_.out) += da1;
  }
  return dx;
}

}  // namespace enhancekit::detail
