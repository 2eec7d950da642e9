#include "dpl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

using nlohmann::json;

namespace dpl {

ParamRef param_ref(const std::string& name, Mat& value, Mat& grad) {
  if (grad.rows() != value.rows() || grad.cols() != value.cols())
    grad = Mat::Zero(value.rows(), value.cols());
  return {name, value.data(), grad.data(), value.rows(), value.cols()};
}

ParamRef param_ref(const std::string& name, Vec& value, Vec& grad) {
  if (grad.size() != value.size()) grad = Vec::Zero(value.size());
  return {name, value.data(), grad.data(), value.size(), 1};
}

// Eigen matrices are column-major internally; tensors serialize
// row-major, so (r, c) lives at values[r*cols + c].
Tensor Tensor::from(const ParamRef& ref) {
  Tensor t;
  t.shape = {ref.rows, ref.cols};
  t.values.resize(static_cast<std::size_t>(ref.size()));
  for (Eigen::Index r = 0; r < ref.rows; ++r)
    for (Eigen::Index c = 0; c < ref.cols; ++c)
      t.values[static_cast<std::size_t>(r * ref.cols + c)] = ref.value[c * ref.rows + r];
  return t;
}

void Tensor::copy_to(const ParamRef& ref) const {
  Eigen::Index n = 1;
  for (Eigen::Index d : shape) n *= d;
  if (n != ref.size())
    throw ShapeError("tensor '" + ref.name + "' size mismatch: checkpoint has " +
                     std::to_string(n) + ", model expects " + std::to_string(ref.size()));
  for (Eigen::Index r = 0; r < ref.rows; ++r)
    for (Eigen::Index c = 0; c < ref.cols; ++c)
      ref.value[c * ref.rows + r] = values[static_cast<std::size_t>(r * ref.cols + c)];
}

bool Tensor::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Embeddings

int EmbeddingTable::row_of(const std::string& token) const {
  auto it = vocab.find(token);
  return it == vocab.end() ? 0 : it->second;
}

void EmbeddingTable::zero_grad() {
  if (!trainable) return;
  if (grad.rows() != matrix.rows() || grad.cols() != matrix.cols())
    grad.resize(matrix.rows(), matrix.cols());
  grad.setZero();
}

EmbeddingTable EmbeddingTable::load_text(std::istream& in) {
  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  int dim = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (first) {
      first = false;
      // Optional "count dim" header: exactly two integer fields.
      std::string a, b, extra;
      std::istringstream probe(line);
      if (probe >> a >> b && !(probe >> extra) &&
          a.find_first_not_of("0123456789") == std::string::npos &&
          b.find_first_not_of("0123456789") == std::string::npos) {
        dim = std::stoi(b);
        continue;
      }
    }
    std::string token;
    fields >> token;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.empty())
      throw ParseError("embedding line with no values: '" + line + "'", 0);
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim)
      throw ValidationError("embedding row for '" + token + "' has " +
                            std::to_string(values.size()) + " values, expected " +
                            std::to_string(dim));
    if (table.vocab.count(token)) continue;  // keep the first occurrence
    table.vocab[token] = static_cast<int>(rows.size()) + 1;
    table.tokens.push_back(token);
    rows.push_back(std::move(values));
  }
  if (dim < 0) throw ValidationError("embedding file holds no vectors");

  table.matrix = Mat::Zero(static_cast<Eigen::Index>(rows.size()) + 1, dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < dim; ++c) table.matrix(static_cast<Eigen::Index>(r) + 1, c) = rows[r][c];
  table.tokens.insert(table.tokens.begin(), kUnknownToken);
  table.vocab[kUnknownToken] = 0;
  return table;
}

EmbeddingTable EmbeddingTable::random_init(const std::vector<std::string>& vocabulary,
                                           int dim, std::mt19937_64& rng, bool trainable,
                                           double scale) {
  EmbeddingTable table;
  table.trainable = trainable;
  table.tokens.push_back(kUnknownToken);
  table.vocab[kUnknownToken] = 0;
  for (const std::string& token : vocabulary) {
    if (table.vocab.count(token)) continue;
    table.vocab[token] = static_cast<int>(table.tokens.size());
    table.tokens.push_back(token);
  }
  std::uniform_real_distribution<double> uniform(-scale, scale);
  table.matrix = Mat::Zero(static_cast<Eigen::Index>(table.tokens.size()), dim);
  for (Eigen::Index r = 1; r < table.matrix.rows(); ++r)
    for (int c = 0; c < dim; ++c) table.matrix(r, c) = uniform(rng);
  if (trainable) table.grad = Mat::Zero(table.matrix.rows(), table.matrix.cols());
  return table;
}

std::vector<int> embed_rows(const std::vector<std::string>& tokens,
                            const EmbeddingTable& table) {
  std::vector<int> rows;
  rows.reserve(tokens.size());
  for (const std::string& token : tokens) rows.push_back(table.row_of(token));
  return rows;
}

Mat embed(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  if (tokens.empty()) throw ValidationError("cannot embed an empty token sequence");
  Mat out(table.dim(), static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t t = 0; t < tokens.size(); ++t)
    out.col(static_cast<Eigen::Index>(t)) = table.matrix.row(table.row_of(tokens[t])).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// LSTM

LstmParams::LstmParams(int input, int hidden, Direction dir)
    : input_size(input), hidden_size(hidden), direction(dir) {
  auto mat = [&](Mat LstmParams::* w, bool recurrent) {
    this->*w = Mat::Zero(hidden, recurrent ? hidden : input);
  };
  mat(&LstmParams::Wxi, false);
  mat(&LstmParams::Whi, true);
  mat(&LstmParams::Wxf, false);
  mat(&LstmParams::Whf, true);
  mat(&LstmParams::Wxo, false);
  mat(&LstmParams::Who, true);
  mat(&LstmParams::Wxc, false);
  mat(&LstmParams::Whc, true);
  bi = Vec::Zero(hidden);
  bf = Vec::Zero(hidden);
  bo = Vec::Zero(hidden);
  bc = Vec::Zero(hidden);
  zero_grad();
}

void LstmParams::init_uniform(std::mt19937_64& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> uniform(-scale, scale);
  for (Mat* w : {&Wxi, &Whi, &Wxf, &Whf, &Wxo, &Who, &Wxc, &Whc})
    for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] = uniform(rng);
  bi.setZero();
  bf.setOnes();  // forget-gate bias starts open
  bo.setZero();
  bc.setZero();
}

namespace {

// Keeps the gradient buffer's storage stable so ParamRefs stay valid.
inline void reset_grad(Mat& grad, Eigen::Index rows, Eigen::Index cols) {
  if (grad.rows() != rows || grad.cols() != cols) grad.resize(rows, cols);
  grad.setZero();
}

inline void reset_grad(Vec& grad, Eigen::Index size) {
  if (grad.size() != size) grad.resize(size);
  grad.setZero();
}

}  // namespace

void LstmParams::zero_grad() {
  reset_grad(gWxi, hidden_size, input_size);
  reset_grad(gWhi, hidden_size, hidden_size);
  reset_grad(gWxf, hidden_size, input_size);
  reset_grad(gWhf, hidden_size, hidden_size);
  reset_grad(gWxo, hidden_size, input_size);
  reset_grad(gWho, hidden_size, hidden_size);
  reset_grad(gWxc, hidden_size, input_size);
  reset_grad(gWhc, hidden_size, hidden_size);
  reset_grad(gbi, hidden_size);
  reset_grad(gbf, hidden_size);
  reset_grad(gbo, hidden_size);
  reset_grad(gbc, hidden_size);
}

std::vector<ParamRef> LstmParams::params(const std::string& prefix) {
  return {
      param_ref(prefix + ".Wxi", Wxi, gWxi), param_ref(prefix + ".Whi", Whi, gWhi),
      param_ref(prefix + ".Wxf", Wxf, gWxf), param_ref(prefix + ".Whf", Whf, gWhf),
      param_ref(prefix + ".Wxo", Wxo, gWxo), param_ref(prefix + ".Who", Who, gWho),
      param_ref(prefix + ".Wxc", Wxc, gWxc), param_ref(prefix + ".Whc", Whc, gWhc),
      param_ref(prefix + ".bi", bi, gbi),    param_ref(prefix + ".bf", bf, gbf),
      param_ref(prefix + ".bo", bo, gbo),    param_ref(prefix + ".bc", bc, gbc),
  };
}

namespace {

inline Eigen::ArrayXd sigmoid_array(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

Mat reverse_cols(const Mat& m) { return m.rowwise().reverse(); }

}  // namespace

Mat recurrent_forward(const Mat& seq, const LstmParams& params, LstmCache* cache) {
  if (seq.rows() != params.input_size)
    throw ShapeError("lstm input size " + std::to_string(seq.rows()) + " != expected " +
                     std::to_string(params.input_size));
  const Eigen::Index n = seq.cols();
  const Eigen::Index h = params.hidden_size;
  Mat X = params.direction == Direction::Backward ? reverse_cols(seq) : seq;

  Mat I(h, n), F(h, n), O(h, n), G(h, n), C(h, n), TC(h, n), H(h, n);
  Vec h_prev = Vec::Zero(h), c_prev = Vec::Zero(h);
  for (Eigen::Index t = 0; t < n; ++t) {
    Vec x = X.col(t);
    Eigen::ArrayXd ai = (params.Wxi * x + params.Whi * h_prev + params.bi).array();
    Eigen::ArrayXd af = (params.Wxf * x + params.Whf * h_prev + params.bf).array();
    Eigen::ArrayXd ao = (params.Wxo * x + params.Who * h_prev + params.bo).array();
    Eigen::ArrayXd ag = (params.Wxc * x + params.Whc * h_prev + params.bc).array();
    Eigen::ArrayXd i = sigmoid_array(ai);
    Eigen::ArrayXd f = sigmoid_array(af);
    Eigen::ArrayXd o = sigmoid_array(ao);
    Eigen::ArrayXd g = ag.tanh();
    Eigen::ArrayXd c = f * c_prev.array() + i * g;
    Eigen::ArrayXd tc = c.tanh();
    Eigen::ArrayXd ht = o * tc;
    I.col(t) = i;
    F.col(t) = f;
    O.col(t) = o;
    G.col(t) = g;
    C.col(t) = c;
    TC.col(t) = tc;
    H.col(t) = ht;
    h_prev = ht.matrix();
    c_prev = c.matrix();
  }
  if (cache) *cache = LstmCache{X, I, F, O, G, C, TC, H};
  return params.direction == Direction::Backward ? reverse_cols(H) : H;
}

Mat recurrent_backward(const Mat& dH, LstmParams& params, const LstmCache& cache) {
  const Eigen::Index n = cache.X.cols();
  const Eigen::Index h = params.hidden_size;
  if (dH.rows() != h || dH.cols() != n)
    throw ShapeError("lstm backward shape mismatch");
  Mat dHproc = params.direction == Direction::Backward ? reverse_cols(dH) : dH;
  Mat dX = Mat::Zero(params.input_size, n);

  Vec dh_next = Vec::Zero(h), dc_next = Vec::Zero(h);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    Eigen::ArrayXd i = cache.I.col(t).array();
    Eigen::ArrayXd f = cache.F.col(t).array();
    Eigen::ArrayXd o = cache.O.col(t).array();
    Eigen::ArrayXd g = cache.G.col(t).array();
    Eigen::ArrayXd tc = cache.TC.col(t).array();
    Vec c_prev = t > 0 ? Vec(cache.C.col(t - 1)) : Vec(Vec::Zero(h));
    Vec h_prev = t > 0 ? Vec(cache.H.col(t - 1)) : Vec(Vec::Zero(h));

    Eigen::ArrayXd dh = dHproc.col(t).array() + dh_next.array();
    Eigen::ArrayXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
    Eigen::ArrayXd da_o = dh * tc * o * (1.0 - o);
    Eigen::ArrayXd da_i = dc * g * i * (1.0 - i);
    Eigen::ArrayXd da_g = dc * i * (1.0 - g.square());
    Eigen::ArrayXd da_f = dc * c_prev.array() * f * (1.0 - f);

    Vec x = cache.X.col(t);
    params.gWxi += da_i.matrix() * x.transpose();
    params.gWhi += da_i.matrix() * h_prev.transpose();
    params.gbi += da_i.matrix();
    params.gWxf += da_f.matrix() * x.transpose();
    params.gWhf += da_f.matrix() * h_prev.transpose();
    params.gbf += da_f.matrix();
    params.gWxo += da_o.matrix() * x.transpose();
    params.gWho += da_o.matrix() * h_prev.transpose();
    params.gbo += da_o.matrix();
    params.gWxc += da_g.matrix() * x.transpose();
    params.gWhc += da_g.matrix() * h_prev.transpose();
    params.gbc += da_g.matrix();

    dX.col(t) = params.Wxi.transpose() * da_i.matrix() +
                params.Wxf.transpose() * da_f.matrix() +
                params.Wxo.transpose() * da_o.matrix() +
                params.Wxc.transpose() * da_g.matrix();
    dh_next = params.Whi.transpose() * da_i.matrix() +
              params.Whf.transpose() * da_f.matrix() +
              params.Who.transpose() * da_o.matrix() +
              params.Whc.transpose() * da_g.matrix();
    dc_next = (dc * f).matrix();
  }
  return params.direction == Direction::Backward ? reverse_cols(dX) : dX;
}

Mat bidirectional_forward(const Mat& seq, const LstmParams& fwd, const LstmParams& bwd,
                          LstmCache* fwd_cache, LstmCache* bwd_cache) {
  if (fwd.direction != Direction::Forward || bwd.direction != Direction::Backward)
    throw ShapeError("bidirectional_forward expects a forward and a backward encoder");
  Mat hf = recurrent_forward(seq, fwd, fwd_cache);
  Mat hb = recurrent_forward(seq, bwd, bwd_cache);
  Mat out(hf.rows() + hb.rows(), seq.cols());
  out.topRows(hf.rows()) = hf;
  out.bottomRows(hb.rows()) = hb;
  return out;
}

Mat bidirectional_backward(const Mat& dH, LstmParams& fwd, LstmParams& bwd,
                           const LstmCache& fwd_cache, const LstmCache& bwd_cache) {
  Mat dF = dH.topRows(fwd.hidden_size);
  Mat dB = dH.bottomRows(bwd.hidden_size);
  return recurrent_backward(dF, fwd, fwd_cache) + recurrent_backward(dB, bwd, bwd_cache);
}

// ---------------------------------------------------------------------------
// Pooling

Vec maxpool_time(const Mat& states, std::vector<Eigen::Index>* argmax) {
  if (states.cols() == 0) throw ValidationError("maxpool over an empty sequence");
  Vec out(states.rows());
  if (argmax) argmax->assign(states.rows(), 0);
  for (Eigen::Index r = 0; r < states.rows(); ++r) {
    Eigen::Index best = 0;
    double value = states(r, 0);
    for (Eigen::Index t = 1; t < states.cols(); ++t) {
      if (states(r, t) > value) {  // ties keep the earliest step
        value = states(r, t);
        best = t;
      }
    }
    out(r) = value;
    if (argmax) (*argmax)[r] = best;
  }
  return out;
}

Mat maxpool_time_backward(const Vec& dA, const std::vector<Eigen::Index>& argmax,
                          Eigen::Index steps) {
  Mat dH = Mat::Zero(dA.size(), steps);
  for (Eigen::Index r = 0; r < dA.size(); ++r) dH(r, argmax[r]) = dA(r);
  return dH;
}

// ---------------------------------------------------------------------------
// Dense / interaction

DenseParams::DenseParams(int input, int output, Activation act)
    : W(Mat::Zero(output, input)), b(Vec::Zero(output)), activation(act) {
  zero_grad();
}

void DenseParams::init_uniform(std::mt19937_64& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(W.cols()));
  std::uniform_real_distribution<double> uniform(-scale, scale);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = uniform(rng);
  b.setZero();
}

void DenseParams::zero_grad() {
  reset_grad(gW, W.rows(), W.cols());
  reset_grad(gb, b.size());
}

std::vector<ParamRef> DenseParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".W", W, gW), param_ref(prefix + ".b", b, gb)};
}

Mat DenseParams::forward(const Mat& input, DenseCache* cache) const {
  if (input.rows() != W.cols())
    throw ShapeError("dense input rows " + std::to_string(input.rows()) + " != " +
                     std::to_string(W.cols()));
  Mat pre = (W * input).colwise() + b;
  Mat out = activation == Activation::Tanh ? Mat(pre.array().tanh()) : pre;
  if (cache) *cache = DenseCache{input, out};
  return out;
}

Vec DenseParams::forward(const Vec& input) const {
  return Vec(forward(Mat(input), nullptr).col(0));
}

Mat DenseParams::backward(const Mat& d_output, const DenseCache& cache) {
  Mat d_pre = activation == Activation::Tanh
                  ? Mat(d_output.array() * (1.0 - cache.output.array().square()))
                  : d_output;
  gW += d_pre * cache.input.transpose();
  gb += d_pre.rowwise().sum();
  return W.transpose() * d_pre;
}

InteractionParams::InteractionParams(int input, int output)
    : W1(Mat::Zero(output, input)), W2(Mat::Zero(output, input)), b(Vec::Zero(output)) {
  zero_grad();
}

void InteractionParams::init_uniform(std::mt19937_64& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(W1.cols()));
  std::uniform_real_distribution<double> uniform(-scale, scale);
  for (Mat* w : {&W1, &W2})
    for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] = uniform(rng);
  b.setZero();
}

void InteractionParams::zero_grad() {
  reset_grad(gW1, W1.rows(), W1.cols());
  reset_grad(gW2, W2.rows(), W2.cols());
  reset_grad(gb, b.size());
}

std::vector<ParamRef> InteractionParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".W1", W1, gW1), param_ref(prefix + ".W2", W2, gW2),
          param_ref(prefix + ".b", b, gb)};
}

Vec interaction(const Vec& a1, const Vec& a2, const Mat& W1, const Mat& W2, const Vec& b) {
  if (W1.cols() != a1.size() || W2.cols() != a2.size() || W1.rows() != W2.rows() ||
      b.size() != W1.rows())
    throw ShapeError("interaction shapes are not conformable");
  return ((W1 * a1 + W2 * a2 + b).array().tanh()).matrix();
}

Vec InteractionParams::forward(const Vec& a1, const Vec& a2, InteractionCache* cache) const {
  Vec out = interaction(a1, a2, W1, W2, b);
  if (cache) *cache = InteractionCache{a1, a2, out};
  return out;
}

std::pair<Vec, Vec> InteractionParams::backward(const Vec& d_output,
                                                const InteractionCache& cache) {
  Vec d_pre = (d_output.array() * (1.0 - cache.output.array().square())).matrix();
  gW1 += d_pre * cache.a1.transpose();
  gW2 += d_pre * cache.a2.transpose();
  gb += d_pre;
  return {W1.transpose() * d_pre, W2.transpose() * d_pre};
}

// ---------------------------------------------------------------------------
// Batch normalization

BatchNormParams::BatchNormParams(int dim)
    : gamma(Vec::Ones(dim)),
      beta(Vec::Zero(dim)),
      running_mean(Vec::Zero(dim)),
      running_var(Vec::Ones(dim)) {
  zero_grad();
}

void BatchNormParams::zero_grad() {
  reset_grad(ggamma, gamma.size());
  reset_grad(gbeta, beta.size());
}

std::vector<ParamRef> BatchNormParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".gamma", gamma, ggamma),
          param_ref(prefix + ".beta", beta, gbeta)};
}

Mat BatchNormParams::forward(const Mat& input, bool train, BatchNormCache* cache) {
  if (input.rows() != gamma.size()) throw ShapeError("batch norm feature size mismatch");
  if (!train) return forward_eval(input);
  const double batch = static_cast<double>(input.cols());
  Vec mean = input.rowwise().mean();
  Mat centered = input.colwise() - mean;
  Vec var = centered.array().square().rowwise().mean();
  Vec inv_std = (var.array() + eps).rsqrt();
  Mat xhat = centered.array().colwise() * inv_std.array();
  Mat out = (xhat.array().colwise() * gamma.array()).colwise() + beta.array();

  // Unbiased variance feeds the running estimate when possible.
  Vec var_update = batch > 1 ? Vec(var * batch / (batch - 1)) : var;
  running_mean = (1 - momentum) * running_mean + momentum * mean;
  running_var = (1 - momentum) * running_var + momentum * var_update;
  if (cache) *cache = BatchNormCache{centered, xhat, inv_std};
  return out;
}

Mat BatchNormParams::forward_eval(const Mat& input) const {
  Vec inv_std = (running_var.array() + eps).rsqrt();
  Mat xhat = (input.colwise() - running_mean).array().colwise() * inv_std.array();
  return (xhat.array().colwise() * gamma.array()).colwise() + beta.array();
}

Mat BatchNormParams::backward(const Mat& d_output, const BatchNormCache& cache) {
  const double batch = static_cast<double>(d_output.cols());
  ggamma += (d_output.array() * cache.xhat.array()).rowwise().sum().matrix();
  gbeta += d_output.rowwise().sum();

  Mat dxhat = d_output.array().colwise() * gamma.array();
  Vec sum_dxhat = dxhat.rowwise().sum();
  Vec sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum().matrix();
  Mat dX = ((dxhat * batch).colwise() - sum_dxhat).array() -
           (cache.xhat.array().colwise() * sum_dxhat_xhat.array());
  dX = dX.array().colwise() * (cache.inv_std.array() / batch);
  return dX;
}

// ---------------------------------------------------------------------------
// Loss, dropout, optimizer

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) throw ValidationError("softmax of an empty vector");
  Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  Eigen::ArrayXd exps = shifted.exp();
  return (exps / exps.sum()).matrix();
}

SoftmaxResult softmax_xent(const Vec& logits, int gold) {
  if (gold < 0 || gold >= logits.size())
    throw ValidationError("gold index " + std::to_string(gold) + " outside 0.." +
                          std::to_string(logits.size() - 1));
  SoftmaxResult result;
  result.probs = softmax(logits);
  result.loss = -std::log(std::max(result.probs(gold), 1e-300));
  return result;
}

Vec softmax_xent_backward(const Vec& probs, int gold) {
  Vec d = probs;
  d(gold) -= 1.0;
  return d;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bce_logit(double logit, double target) {
  // max(z,0) - z*y + log(1 + exp(-|z|))
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

double bce_logit_backward(double logit, double target) { return sigmoid(logit) - target; }

Mat dropout(const Mat& input, double ratio, std::mt19937_64& rng, bool train,
            Mat* mask_out) {
  if (ratio < 0 || ratio >= 1)
    throw ValidationError("dropout ratio must be in [0, 1)");
  if (!train || ratio == 0) {
    if (mask_out) *mask_out = Mat::Ones(input.rows(), input.cols());
    return input;
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Mat mask(input.rows(), input.cols());
  const double keep = 1.0 - ratio;
  for (Eigen::Index c = 0; c < input.cols(); ++c)
    for (Eigen::Index r = 0; r < input.rows(); ++r)
      mask(r, c) = uniform(rng) < keep ? 1.0 / keep : 0.0;
  if (mask_out) *mask_out = mask;
  return input.cwiseProduct(mask);
}

void AdamState::init(const std::vector<ParamRef>& params) {
  step = 0;
  m.assign(params.size(), {});
  v.assign(params.size(), {});
  for (std::size_t p = 0; p < params.size(); ++p) {
    m[p].assign(static_cast<std::size_t>(params[p].size()), 0.0);
    v[p].assign(static_cast<std::size_t>(params[p].size()), 0.0);
  }
}

void adam_step(const std::vector<ParamRef>& params, AdamState& state) {
  if (state.m.size() != params.size()) state.init(params);
  ++state.step;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamRef& ref = params[p];
    std::vector<double>& mp = state.m[p];
    std::vector<double>& vp = state.v[p];
    if (mp.size() != static_cast<std::size_t>(ref.size()))
      throw ShapeError("adam moment shape mismatch for " + ref.name);
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      double g = ref.grad[i];
      mp[i] = b1 * mp[i] + (1 - b1) * g;
      vp[i] = b2 * vp[i] + (1 - b2) * g * g;
      double mhat = mp[i] / correction1;
      double vhat = vp[i] / correction2;
      ref.value[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckReport grad_check(const std::vector<ParamRef>& params,
                           const std::function<double()>& loss_grad,
                           const std::function<double()>& loss_only, double eps,
                           Eigen::Index max_per_param) {
  loss_grad();
  std::vector<std::vector<double>> analytic(params.size());
  for (std::size_t p = 0; p < params.size(); ++p)
    analytic[p].assign(params[p].grad, params[p].grad + params[p].size());

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamRef& ref = params[p];
    Eigen::Index stride = 1;
    if (max_per_param > 0 && ref.size() > max_per_param)
      stride = ref.size() / max_per_param;
    for (Eigen::Index i = 0; i < ref.size(); i += stride) {
      double saved = ref.value[i];
      ref.value[i] = saved + eps;
      double plus = loss_only();
      ref.value[i] = saved - eps;
      double minus = loss_only();
      ref.value[i] = saved;
      double numeric = (plus - minus) / (2 * eps);
      double a = analytic[p][static_cast<std::size_t>(i)];
      // The 1e-4 floor keeps cancellation noise on near-zero components
      // (|f(x+e)-f(x-e)| ~ ulps of the loss) from masquerading as error.
      double err = std::abs(a - numeric) / std::max({1e-4, std::abs(a), std::abs(numeric)});
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = ref.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoints

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::string Checkpoint::to_json() const {
  json j;
  j["format"] = "dpl-checkpoint-v1";
  j["kind"] = kind;
  j["config"] = config_json.empty() ? json(nullptr) : json::parse(config_json);
  j["config_hash"] = config_hash;
  j["sense_level"] = sense_level;
  j["vocab"] = vocab;
  j["inventory"] = inventory;
  json params = json::array();
  for (const auto& [name, tensor] : tensors) {
    json t;
    t["name"] = name;
    t["shape"] = tensor.shape;
    t["values"] = tensor.values;
    params.push_back(std::move(t));
  }
  j["params"] = std::move(params);
  return j.dump();
}

Checkpoint Checkpoint::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "dpl-checkpoint-v1")
    throw ValidationError("not a dpl checkpoint");
  Checkpoint ckpt;
  ckpt.kind = j.value("kind", "");
  if (j.contains("config") && !j["config"].is_null()) ckpt.config_json = j["config"].dump();
  ckpt.config_hash = j.value("config_hash", "");
  ckpt.sense_level = j.value("sense_level", 2);
  if (j.contains("vocab")) ckpt.vocab = j["vocab"].get<std::vector<std::string>>();
  if (j.contains("inventory"))
    ckpt.inventory = j["inventory"].get<std::vector<std::string>>();
  for (const auto& t : j.at("params")) {
    Tensor tensor;
    tensor.shape = t.at("shape").get<std::vector<Eigen::Index>>();
    tensor.values = t.at("values").get<std::vector<double>>();
    if (!tensor.all_finite())
      throw ValidationError("checkpoint tensor '" + t.at("name").get<std::string>() +
                            "' holds non-finite values");
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(tensor));
  }
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << to_json() << '\n';
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace dpl
