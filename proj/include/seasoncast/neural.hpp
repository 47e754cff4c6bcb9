#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/features.hpp"
#include "seasoncast/rng.hpp"

namespace seasoncast::neural {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

enum class Activation { Identity, Relu, Tanh };

inline double apply_activation(Activation a, double v) {
    switch (a) {
        case Activation::Identity: return v;
        case Activation::Relu: return v > 0.0 ? v : 0.0;
        case Activation::Tanh: return std::tanh(v);
    }
    return v;
}

enum class CellType { Dense, SimpleRnn, Gru, Lstm };

inline const char* to_string(CellType t) {
    switch (t) {
        case CellType::Dense: return "dense";
        case CellType::SimpleRnn: return "simple_rnn";
        case CellType::Gru: return "gru";
        case CellType::Lstm: return "lstm";
    }
    return "?";
}

inline CellType parse_cell_type(const std::string& s) {
    if (s == "dense") return CellType::Dense;
    if (s == "simple_rnn") return CellType::SimpleRnn;
    if (s == "gru") return CellType::Gru;
    if (s == "lstm") return CellType::Lstm;
    throw std::invalid_argument("unknown model.type: " + s);
}

inline ModelTag tag_for(CellType t, bool cheat) {
    switch (t) {
        case CellType::Dense: return cheat ? ModelTag::NN_Classic_cheat : ModelTag::NN_Classic;
        case CellType::SimpleRnn:
            return cheat ? ModelTag::RNN_Simple_cheat : ModelTag::RNN_Simple;
        case CellType::Gru: return cheat ? ModelTag::RNN_GRU_cheat : ModelTag::RNN_GRU;
        case CellType::Lstm: return cheat ? ModelTag::RNN_LSTM_cheat : ModelTag::RNN_LSTM;
    }
    return ModelTag::NN_Classic;
}

// ---------------------------------------------------------------------------
// Single-step primitives (also used to reproduce the worked examples, where
// the activation argument is scaled by a fixed 0.5)
// ---------------------------------------------------------------------------

/// activation(scale * (x W + b)) for a single input vector.
inline VectorXd dense_layer(const MatrixXd& W, const VectorXd& b, const VectorXd& x,
                            Activation act, double scale = 1.0) {
    if (W.rows() != x.size() || W.cols() != b.size())
        throw std::invalid_argument("dense_layer: shape mismatch");
    VectorXd a = W.transpose() * x + b;
    for (int i = 0; i < a.size(); ++i) a(i) = apply_activation(act, scale * a(i));
    return a;
}

/// Elman state update: activation(scale * (x Wx + s_prev U + b)).
inline VectorXd simple_rnn_step(const MatrixXd& Wx, const MatrixXd& U, const VectorXd& b,
                                const VectorXd& x, const VectorXd& s_prev, Activation act,
                                double scale = 1.0) {
    VectorXd a = Wx.transpose() * x + U.transpose() * s_prev + b;
    for (int i = 0; i < a.size(); ++i) a(i) = apply_activation(act, scale * a(i));
    return a;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Gate blocks are stored side by side in one kernel: columns [z | r | candidate].
struct GruParams {
    MatrixXd W;  // in x 3n
    MatrixXd U;  // n x 3n
    VectorXd b;  // 3n
};

inline VectorXd gru_step(const GruParams& p, const VectorXd& x, const VectorXd& h_prev) {
    const int n = static_cast<int>(h_prev.size());
    VectorXd az = p.W.middleCols(0, n).transpose() * x + p.U.middleCols(0, n).transpose() * h_prev +
                  p.b.segment(0, n);
    VectorXd ar = p.W.middleCols(n, n).transpose() * x + p.U.middleCols(n, n).transpose() * h_prev +
                  p.b.segment(n, n);
    VectorXd z = az.unaryExpr([](double v) { return sigmoid(v); });
    VectorXd r = ar.unaryExpr([](double v) { return sigmoid(v); });
    VectorXd ac = p.W.middleCols(2 * n, n).transpose() * x +
                  p.U.middleCols(2 * n, n).transpose() * (r.cwiseProduct(h_prev)) +
                  p.b.segment(2 * n, n);
    VectorXd hc = ac.array().tanh();
    return (VectorXd::Ones(n) - z).cwiseProduct(h_prev) + z.cwiseProduct(hc);
}

/// Gate blocks [input | forget | candidate | output].
struct LstmParams {
    MatrixXd W;  // in x 4n
    MatrixXd U;  // n x 4n
    VectorXd b;  // 4n
};

inline std::pair<VectorXd, VectorXd> lstm_step(const LstmParams& p, const VectorXd& x,
                                               const VectorXd& h_prev, const VectorXd& c_prev) {
    const int n = static_cast<int>(h_prev.size());
    VectorXd a = p.W.transpose() * x + p.U.transpose() * h_prev + p.b;
    VectorXd i = a.segment(0, n).unaryExpr([](double v) { return sigmoid(v); });
    VectorXd f = a.segment(n, n).unaryExpr([](double v) { return sigmoid(v); });
    VectorXd cc = a.segment(2 * n, n).array().tanh();
    VectorXd o = a.segment(3 * n, n).unaryExpr([](double v) { return sigmoid(v); });
    VectorXd c = f.cwiseProduct(c_prev) + i.cwiseProduct(cc);
    VectorXd h = o.cwiseProduct(c.array().tanh().matrix());
    return {h, c};
}

/// He normal draws: i.i.d. N(0, 2/fan_in), row-major fill order.
inline MatrixXd he_normal_init(int fan_in, int rows, int cols, Rng& rng) {
    if (fan_in < 1) throw std::invalid_argument("he_normal_init: fan_in must be >= 1");
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    MatrixXd W(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) W(i, j) = rng.normal(0.0, sd);
    return W;
}

// ---------------------------------------------------------------------------
// Trainable layers
// ---------------------------------------------------------------------------

struct LayerCache {
    MatrixXd A;   // pre-activations (dense / simple rnn)
    MatrixXd H;   // outputs, T x n
    MatrixXd Z, R, Hc;            // gru gates
    MatrixXd I, F, Cc, O, C, Tc;  // lstm gates, cell state, tanh(cell)
    MatrixXd X;   // layer input
};

/// One layer of the network. Dense layers treat rows independently; recurrent
/// layers treat rows as ordered timesteps of a single sequence whose state
/// starts at zero.
struct Layer {
    CellType type = CellType::Dense;
    Activation act = Activation::Relu;  // dense / simple rnn only
    int in = 0, n = 0;
    MatrixXd W;  // in x (g*n)
    MatrixXd U;  // n x (g*n), recurrent types only
    VectorXd b;  // g*n
    MatrixXd gW, gU;
    VectorXd gb;

    static int gates(CellType t) {
        switch (t) {
            case CellType::Dense:
            case CellType::SimpleRnn: return 1;
            case CellType::Gru: return 3;
            case CellType::Lstm: return 4;
        }
        return 1;
    }

    Layer() = default;
    Layer(CellType t, int in_dim, int n_nodes, Activation a = Activation::Relu)
        : type(t), act(a), in(in_dim), n(n_nodes) {
        const int g = gates(t);
        W = MatrixXd::Zero(in, g * n);
        b = VectorXd::Zero(g * n);
        if (t != CellType::Dense) U = MatrixXd::Zero(n, g * n);
        zero_grads();
    }

    void init_weights(Rng& rng) {
        const int g = gates(type);
        W = he_normal_init(in, in, g * n, rng);
        if (type != CellType::Dense) U = he_normal_init(n, n, g * n, rng);
        b.setZero();
    }

    void zero_grads() {
        gW = MatrixXd::Zero(W.rows(), W.cols());
        if (type != CellType::Dense) gU = MatrixXd::Zero(U.rows(), U.cols());
        gb = VectorXd::Zero(b.size());
    }

    std::size_t param_count() const {
        std::size_t c = W.size() + b.size();
        if (type != CellType::Dense) c += U.size();
        return c;
    }

    std::vector<MatrixXd*> params_w() {
        std::vector<MatrixXd*> v{&W};
        if (type != CellType::Dense) v.push_back(&U);
        return v;
    }

    MatrixXd forward(const MatrixXd& X, LayerCache& cache) const {
        const int T = static_cast<int>(X.rows());
        cache.X = X;
        switch (type) {
            case CellType::Dense: {
                cache.A = X * W;
                cache.A.rowwise() += b.transpose();
                cache.H = cache.A.unaryExpr([&](double v) { return apply_activation(act, v); });
                return cache.H;
            }
            case CellType::SimpleRnn: {
                cache.A.resize(T, n);
                cache.H.resize(T, n);
                RowVectorXd h = RowVectorXd::Zero(n);
                for (int t = 0; t < T; ++t) {
                    RowVectorXd a = X.row(t) * W + h * U + b.transpose();
                    cache.A.row(t) = a;
                    for (int j = 0; j < n; ++j) a(j) = apply_activation(act, a(j));
                    cache.H.row(t) = a;
                    h = a;
                }
                return cache.H;
            }
            case CellType::Gru: {
                cache.Z.resize(T, n);
                cache.R.resize(T, n);
                cache.Hc.resize(T, n);
                cache.H.resize(T, n);
                RowVectorXd h = RowVectorXd::Zero(n);
                for (int t = 0; t < T; ++t) {
                    RowVectorXd azr = X.row(t) * W.leftCols(2 * n) + h * U.leftCols(2 * n) +
                                      b.head(2 * n).transpose();
                    RowVectorXd z = azr.head(n).unaryExpr([](double v) { return sigmoid(v); });
                    RowVectorXd r = azr.tail(n).unaryExpr([](double v) { return sigmoid(v); });
                    RowVectorXd ac = X.row(t) * W.rightCols(n) + (r.cwiseProduct(h)) * U.rightCols(n) +
                                     b.tail(n).transpose();
                    RowVectorXd hc = ac.array().tanh();
                    RowVectorXd hnew =
                        (RowVectorXd::Ones(n) - z).cwiseProduct(h) + z.cwiseProduct(hc);
                    cache.Z.row(t) = z;
                    cache.R.row(t) = r;
                    cache.Hc.row(t) = hc;
                    cache.H.row(t) = hnew;
                    h = hnew;
                }
                return cache.H;
            }
            case CellType::Lstm: {
                cache.I.resize(T, n);
                cache.F.resize(T, n);
                cache.Cc.resize(T, n);
                cache.O.resize(T, n);
                cache.C.resize(T, n);
                cache.Tc.resize(T, n);
                cache.H.resize(T, n);
                RowVectorXd h = RowVectorXd::Zero(n);
                RowVectorXd c = RowVectorXd::Zero(n);
                for (int t = 0; t < T; ++t) {
                    RowVectorXd a = X.row(t) * W + h * U + b.transpose();
                    RowVectorXd i = a.head(n).unaryExpr([](double v) { return sigmoid(v); });
                    RowVectorXd f =
                        a.segment(n, n).unaryExpr([](double v) { return sigmoid(v); });
                    RowVectorXd cc = a.segment(2 * n, n).array().tanh();
                    RowVectorXd o = a.tail(n).unaryExpr([](double v) { return sigmoid(v); });
                    RowVectorXd cnew = f.cwiseProduct(c) + i.cwiseProduct(cc);
                    RowVectorXd tc = cnew.array().tanh();
                    cache.I.row(t) = i;
                    cache.F.row(t) = f;
                    cache.Cc.row(t) = cc;
                    cache.O.row(t) = o;
                    cache.C.row(t) = cnew;
                    cache.Tc.row(t) = tc;
                    cache.H.row(t) = o.cwiseProduct(tc);
                    h = cache.H.row(t);
                    c = cnew;
                }
                return cache.H;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the
    /// layer input. Recurrent credit flows backward through time.
    MatrixXd backward(const MatrixXd& dH_in, const LayerCache& cache) {
        const int T = static_cast<int>(cache.H.rows());
        const MatrixXd& X = cache.X;
        MatrixXd dX = MatrixXd::Zero(T, in);
        switch (type) {
            case CellType::Dense: {
                MatrixXd dA(T, n);
                for (int t = 0; t < T; ++t)
                    for (int j = 0; j < n; ++j) {
                        double d = 1.0;
                        if (act == Activation::Relu) d = cache.A(t, j) > 0.0 ? 1.0 : 0.0;
                        if (act == Activation::Tanh) d = 1.0 - cache.H(t, j) * cache.H(t, j);
                        dA(t, j) = dH_in(t, j) * d;
                    }
                gW.noalias() += X.transpose() * dA;
                gb.noalias() += dA.colwise().sum().transpose();
                dX.noalias() = dA * W.transpose();
                return dX;
            }
            case CellType::SimpleRnn: {
                RowVectorXd carry = RowVectorXd::Zero(n);
                for (int t = T - 1; t >= 0; --t) {
                    RowVectorXd dh = dH_in.row(t) + carry;
                    RowVectorXd da(n);
                    for (int j = 0; j < n; ++j) {
                        double d = 1.0;
                        if (act == Activation::Relu) d = cache.A(t, j) > 0.0 ? 1.0 : 0.0;
                        if (act == Activation::Tanh) d = 1.0 - cache.H(t, j) * cache.H(t, j);
                        da(j) = dh(j) * d;
                    }
                    gW.noalias() += X.row(t).transpose() * da;
                    if (t > 0) gU.noalias() += cache.H.row(t - 1).transpose() * da;
                    gb.noalias() += da.transpose();
                    dX.row(t) = da * W.transpose();
                    carry = da * U.transpose();
                }
                return dX;
            }
            case CellType::Gru: {
                RowVectorXd carry = RowVectorXd::Zero(n);
                for (int t = T - 1; t >= 0; --t) {
                    RowVectorXd h_prev =
                        t > 0 ? RowVectorXd(cache.H.row(t - 1)) : RowVectorXd::Zero(n);
                    RowVectorXd dh = dH_in.row(t) + carry;
                    RowVectorXd z = cache.Z.row(t), r = cache.R.row(t), hc = cache.Hc.row(t);

                    RowVectorXd dz = dh.cwiseProduct(hc - h_prev);
                    RowVectorXd dhc = dh.cwiseProduct(z);
                    RowVectorXd dh_prev =
                        dh.cwiseProduct(RowVectorXd::Ones(n) - z);

                    RowVectorXd dac =
                        dhc.cwiseProduct(RowVectorXd::Ones(n) - hc.cwiseProduct(hc));
                    RowVectorXd drh = dac * U.rightCols(n).transpose();
                    RowVectorXd dr = drh.cwiseProduct(h_prev);
                    dh_prev += drh.cwiseProduct(r);

                    RowVectorXd daz =
                        dz.cwiseProduct(z).cwiseProduct(RowVectorXd::Ones(n) - z);
                    RowVectorXd dar =
                        dr.cwiseProduct(r).cwiseProduct(RowVectorXd::Ones(n) - r);

                    RowVectorXd da(3 * n);
                    da << daz, dar, dac;
                    gW.noalias() += X.row(t).transpose() * da;
                    gb.noalias() += da.transpose();
                    // recurrent kernel sees h_prev for z/r and r*h_prev for the candidate
                    RowVectorXd rh = r.cwiseProduct(h_prev);
                    gU.leftCols(2 * n).noalias() += h_prev.transpose() * da.head(2 * n);
                    gU.rightCols(n).noalias() += rh.transpose() * dac;

                    dh_prev += daz * U.middleCols(0, n).transpose();
                    dh_prev += dar * U.middleCols(n, n).transpose();
                    dX.row(t) = da * W.transpose();
                    carry = dh_prev;
                }
                return dX;
            }
            case CellType::Lstm: {
                RowVectorXd carry_h = RowVectorXd::Zero(n);
                RowVectorXd carry_c = RowVectorXd::Zero(n);
                for (int t = T - 1; t >= 0; --t) {
                    RowVectorXd h_prev =
                        t > 0 ? RowVectorXd(cache.H.row(t - 1)) : RowVectorXd::Zero(n);
                    RowVectorXd c_prev =
                        t > 0 ? RowVectorXd(cache.C.row(t - 1)) : RowVectorXd::Zero(n);
                    RowVectorXd i = cache.I.row(t), f = cache.F.row(t), cc = cache.Cc.row(t),
                                o = cache.O.row(t), tc = cache.Tc.row(t);
                    RowVectorXd dh = dH_in.row(t) + carry_h;
                    RowVectorXd dov = dh.cwiseProduct(tc);
                    RowVectorXd dc = carry_c +
                                     dh.cwiseProduct(o).cwiseProduct(
                                         RowVectorXd::Ones(n) - tc.cwiseProduct(tc));
                    RowVectorXd df = dc.cwiseProduct(c_prev);
                    RowVectorXd di = dc.cwiseProduct(cc);
                    RowVectorXd dcc = dc.cwiseProduct(i);
                    carry_c = dc.cwiseProduct(f);

                    RowVectorXd dai = di.cwiseProduct(i).cwiseProduct(RowVectorXd::Ones(n) - i);
                    RowVectorXd daf = df.cwiseProduct(f).cwiseProduct(RowVectorXd::Ones(n) - f);
                    RowVectorXd dac =
                        dcc.cwiseProduct(RowVectorXd::Ones(n) - cc.cwiseProduct(cc));
                    RowVectorXd dao = dov.cwiseProduct(o).cwiseProduct(RowVectorXd::Ones(n) - o);

                    RowVectorXd da(4 * n);
                    da << dai, daf, dac, dao;
                    gW.noalias() += X.row(t).transpose() * da;
                    gU.noalias() += h_prev.transpose() * da;
                    gb.noalias() += da.transpose();
                    dX.row(t) = da * W.transpose();
                    carry_h = da * U.transpose();
                }
                return dX;
            }
        }
        throw std::logic_error("unreachable");
    }
};

// ---------------------------------------------------------------------------
// AMSGrad optimizer
// ---------------------------------------------------------------------------

/// Adam moments with a non-decreasing second-moment denominator. The step
/// count drives the usual bias correction; the per-epoch learning-rate decay
/// is applied by the caller through lr_eff.
class AmsGrad {
public:
    AmsGrad(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void attach(const std::vector<MatrixXd*>& params) {
        m_.clear();
        v_.clear();
        vhat_.clear();
        for (auto* p : params) {
            m_.emplace_back(MatrixXd::Zero(p->rows(), p->cols()));
            v_.emplace_back(MatrixXd::Zero(p->rows(), p->cols()));
            vhat_.emplace_back(MatrixXd::Zero(p->rows(), p->cols()));
        }
        t_ = 0;
    }

    void step(const std::vector<MatrixXd*>& params, const std::vector<const MatrixXd*>& grads,
              double lr_eff) {
        ++t_;
        const double correction =
            std::sqrt(1.0 - std::pow(beta2_, t_)) / (1.0 - std::pow(beta1_, t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * (*grads[k]);
            v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k]->cwiseProduct(*grads[k]);
            vhat_[k] = vhat_[k].cwiseMax(v_[k]);
            params[k]->noalias() -=
                (lr_eff * correction) *
                m_[k].cwiseQuotient((vhat_[k].cwiseSqrt().array() + eps_).matrix());
        }
    }

    long long steps() const { return t_; }
    const std::vector<MatrixXd>& vhat() const { return vhat_; }

private:
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<MatrixXd> m_, v_, vhat_;
};

// ---------------------------------------------------------------------------
// Network and training protocol
// ---------------------------------------------------------------------------

struct NetworkConfig {
    CellType model_type = CellType::Dense;
    int nlayers = 1;
    int nnodes = 25;
    double kernel_l2 = 0.0;
    bool mixed_cheat = false;
    int max_epochs = 500;
    int ma_window = 10;
    int batch_size_dense = 32;
    double lr = 0.001;
    double lr_decay = 0.0001;  // applied per epoch: lr / (1 + decay * completed_epochs)
    std::uint64_t seed = 0;

    /// Checks membership in the factorial design space.
    void validate_factor_levels() const {
        auto in = [](int v, std::initializer_list<int> s) {
            return std::find(s.begin(), s.end(), v) != s.end();
        };
        if (!in(nlayers, {1, 2})) throw std::invalid_argument("nlayers outside design levels");
        if (!in(nnodes, {25, 50, 75, 100}))
            throw std::invalid_argument("nnodes outside design levels");
        if (kernel_l2 != 0.0 && kernel_l2 != 0.0001)
            throw std::invalid_argument("kernel.L2.reg outside design levels");
    }
};

class Network {
public:
    Network() = default;
    Network(const NetworkConfig& cfg, int input_width) : cfg_(cfg), input_width_(input_width) {
        int in = input_width;
        for (int l = 0; l < cfg.nlayers; ++l) {
            layers_.emplace_back(cfg.model_type, in, cfg.nnodes, Activation::Relu);
            in = cfg.nnodes;
        }
        layers_.emplace_back(CellType::Dense, in, 1, Activation::Identity);
        Rng rng(cfg.seed);
        for (auto& l : layers_) l.init_weights(rng);
    }

    const NetworkConfig& config() const { return cfg_; }
    int input_width() const { return input_width_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    std::size_t param_count() const {
        std::size_t c = 0;
        for (const auto& l : layers_) c += l.param_count();
        return c;
    }

    double kernel_sumsq() const {
        double s = 0.0;
        for (const auto& l : layers_) s += l.W.squaredNorm();
        return s;
    }
    double kernel_penalty() const { return cfg_.kernel_l2 * kernel_sumsq(); }

    VectorXd forward(const MatrixXd& X) const {
        std::vector<LayerCache> caches(layers_.size());
        MatrixXd h = X;
        for (std::size_t l = 0; l < layers_.size(); ++l) h = layers_[l].forward(h, caches[l]);
        return h.col(0);
    }

    /// MAE + L2 penalty on kernel weights; no gradient work.
    double loss_only(const MatrixXd& X, const VectorXd& y) const {
        VectorXd pred = forward(X);
        return (pred - y).cwiseAbs().mean() + kernel_penalty();
    }

    /// Computes the loss and accumulates parameter gradients (grads are
    /// zeroed first). The L2 term contributes 2*l2*W to each kernel gradient.
    double loss_with_grads(const MatrixXd& X, const VectorXd& y) {
        for (auto& l : layers_) l.zero_grads();
        std::vector<LayerCache> caches(layers_.size());
        MatrixXd h = X;
        for (std::size_t l = 0; l < layers_.size(); ++l) h = layers_[l].forward(h, caches[l]);
        VectorXd err = h.col(0) - y;
        const double T = static_cast<double>(err.size());
        MatrixXd dH(err.size(), 1);
        for (int t = 0; t < err.size(); ++t)
            dH(t, 0) = (err(t) > 0.0 ? 1.0 : (err(t) < 0.0 ? -1.0 : 0.0)) / T;
        for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l)
            dH = layers_[l].backward(dH, caches[l]);
        if (cfg_.kernel_l2 > 0.0)
            for (auto& l : layers_) l.gW.noalias() += (2.0 * cfg_.kernel_l2) * l.W;
        return err.cwiseAbs().mean() + kernel_penalty();
    }

private:
    NetworkConfig cfg_;
    int input_width_ = 0;
    std::vector<Layer> layers_;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_wape = std::numeric_limits<double>::quiet_NaN();
};

/// Epoch count whose trailing moving-average window of validation WAPEs is
/// lowest; ties go to the smallest epoch. Histories shorter than the window
/// fall back to the raw argmin.
inline int choose_epochs(const std::vector<double>& val_wapes, int window) {
    if (val_wapes.empty()) throw std::invalid_argument("choose_epochs: empty history");
    std::vector<double> smooth = val_wapes.size() >= static_cast<std::size_t>(window)
                                     ? moving_average(val_wapes, window)
                                     : val_wapes;
    int best = 0;
    for (std::size_t k = 1; k < smooth.size(); ++k)
        if (smooth[k] < smooth[best]) best = static_cast<int>(k);
    return best + 1;
}

struct NetworkFit {
    NetworkConfig config;
    Network network;  // refit on the full window
    int chosen_epochs = 0;
    std::vector<EpochRecord> history;  // phase-1 records
    bool refit = false;
    bool diverged = false;
};

namespace detail {

inline void collect_params(Network& net, std::vector<MatrixXd*>& params,
                           std::vector<const MatrixXd*>& grads, std::vector<VectorXd*>& bias,
                           std::vector<const VectorXd*>& bias_grads) {
    params.clear();
    grads.clear();
    bias.clear();
    bias_grads.clear();
    for (auto& l : net.layers()) {
        params.push_back(&l.W);
        grads.push_back(&l.gW);
        if (l.type != CellType::Dense) {
            params.push_back(&l.U);
            grads.push_back(&l.gU);
        }
        bias.push_back(&l.b);
        bias_grads.push_back(&l.gb);
    }
}

}  // namespace detail

/// Training/validation split of an encoded design: phase-1 trains on the rows
/// before the validation block; validation covers the last `val_days` days.
struct TrainSplit {
    int val_days = 0;
};

class Trainer {
public:
    Trainer(const NetworkConfig& cfg, const features::Design& design)
        : cfg_(cfg), design_(design) {
        if (design.cheat != cfg.mixed_cheat)
            throw std::invalid_argument("design cheat columns do not match the configuration");
    }

    /// Two-phase protocol: train max_epochs against the validation week,
    /// smooth the validation WAPE curve, pick the epoch count, then refit on
    /// the full window with the same seed.
    NetworkFit train(int val_days = -1) {
        const int P = design_.grid.periods_per_day;
        if (val_days < 0) val_days = design_.grid.days_per_week;
        const int n_days = design_.n_rows() / P;
        if (val_days >= n_days)
            throw CoverageError("validation window leaves no training days");
        const int train_days = n_days - val_days;

        NetworkFit fit;
        fit.config = cfg_;

        // phase 1
        Network net(cfg_, static_cast<int>(design_.X.cols()));
        Rng shuffle_rng(mix_seed(cfg_.seed, 0x5eed));
        std::vector<double> val_wapes;
        bool diverged = false;
        for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
            double loss = run_epoch(net, shuffle_rng, epoch, 0, train_days);
            if (!std::isfinite(loss)) {
                diverged = true;
                break;
            }
            double vw = validation_wape(net, train_days, n_days);
            fit.history.push_back({epoch, loss, vw});
            val_wapes.push_back(vw);
        }
        if (diverged || val_wapes.empty()) {
            fit.diverged = true;
            fit.network = net;
            return fit;
        }

        fit.chosen_epochs = choose_epochs(val_wapes, cfg_.ma_window);

        // phase 2: reinitialize with the same seed, train on all days
        Network refit_net(cfg_, static_cast<int>(design_.X.cols()));
        Rng refit_rng(mix_seed(cfg_.seed, 0x5eed));
        for (int epoch = 1; epoch <= fit.chosen_epochs; ++epoch) {
            double loss = run_epoch(refit_net, refit_rng, epoch, 0, n_days);
            if (!std::isfinite(loss)) {
                fit.diverged = true;
                fit.network = net;
                return fit;
            }
        }
        fit.network = refit_net;
        fit.refit = true;
        return fit;
    }

private:
    double lr_for_epoch(int epoch) const {
        return cfg_.lr / (1.0 + cfg_.lr_decay * static_cast<double>(epoch - 1));
    }

    void ensure_opt(Network& net) {
        detail::collect_params(net, params_, grads_, bias_, bias_grads_);
        bias_mats_.assign(bias_.size(), MatrixXd());
        bias_grad_mats_.assign(bias_.size(), MatrixXd());
        opt_ = AmsGrad();
        // biases ride along as single-column matrices
        for (std::size_t k = 0; k < bias_.size(); ++k) {
            bias_mats_[k] = *bias_[k];
            bias_grad_mats_[k] = *bias_grads_[k];
        }
        std::vector<MatrixXd*> attach = params_;
        for (auto& bm : bias_mats_) attach.push_back(&bm);
        opt_.attach(attach);
    }

    void apply_update(double lr_eff) {
        std::vector<MatrixXd*> ps = params_;
        std::vector<const MatrixXd*> gs = grads_;
        for (std::size_t k = 0; k < bias_.size(); ++k) {
            bias_mats_[k] = *bias_[k];
            bias_grad_mats_[k] = *bias_grads_[k];
            ps.push_back(&bias_mats_[k]);
            gs.push_back(&bias_grad_mats_[k]);
        }
        opt_.step(ps, gs, lr_eff);
        for (std::size_t k = 0; k < bias_.size(); ++k) *bias_[k] = bias_mats_[k].col(0);
    }

    /// One pass over the training days; returns the mean per-batch loss.
    double run_epoch(Network& net, Rng& rng, int epoch, int first_day, int n_train_days) {
        const int P = design_.grid.periods_per_day;
        const double lr_eff = lr_for_epoch(epoch);
        if (epoch == 1) ensure_opt(net);
        double loss_sum = 0.0;
        int n_batches = 0;

        if (cfg_.model_type == CellType::Dense) {
            std::vector<int> rows(static_cast<std::size_t>(n_train_days) * P);
            std::iota(rows.begin(), rows.end(), first_day * P);
            rng.shuffle(rows.begin(), rows.end());
            const int B = cfg_.batch_size_dense;
            for (std::size_t start = 0; start < rows.size(); start += B) {
                const int bsz = static_cast<int>(std::min<std::size_t>(B, rows.size() - start));
                MatrixXd Xb(bsz, design_.X.cols());
                VectorXd yb(bsz);
                for (int i = 0; i < bsz; ++i) {
                    Xb.row(i) = design_.X.row(rows[start + i]);
                    yb(i) = design_.targets(rows[start + i]);
                }
                double loss = net.loss_with_grads(Xb, yb);
                if (!std::isfinite(loss)) return loss;
                apply_update(lr_eff);
                loss_sum += loss;
                ++n_batches;
            }
        } else {
            std::vector<int> days(n_train_days);
            std::iota(days.begin(), days.end(), first_day);
            rng.shuffle(days.begin(), days.end());
            for (int d : days) {
                MatrixXd Xd = design_.X.middleRows(d * P, P);
                VectorXd yd = design_.targets.segment(d * P, P);
                double loss = net.loss_with_grads(Xd, yd);
                if (!std::isfinite(loss)) return loss;
                apply_update(lr_eff);
                loss_sum += loss;
                ++n_batches;
            }
        }
        return n_batches > 0 ? loss_sum / n_batches : std::numeric_limits<double>::quiet_NaN();
    }

    /// Pooled WAPE on the count scale over the validation days.
    double validation_wape(const Network& net, int first_val_day, int end_day) const {
        const int P = design_.grid.periods_per_day;
        std::vector<double> actual, pred;
        for (int d = first_val_day; d < end_day; ++d) {
            MatrixXd Xd = design_.X.middleRows(d * P, P);
            VectorXd out = net.forward(Xd);
            for (int p = 0; p < P; ++p) {
                actual.push_back(design_.actual_calls[d * P + p]);
                pred.push_back(inverse_transform(design_.target_std.invert(out(p))));
            }
        }
        double total = 0.0;
        for (double a : actual) total += a;
        if (total <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        return wape(actual, pred);
    }

    NetworkConfig cfg_;
    const features::Design& design_;
    AmsGrad opt_;
    std::vector<MatrixXd*> params_;
    std::vector<const MatrixXd*> grads_;
    std::vector<VectorXd*> bias_;
    std::vector<const VectorXd*> bias_grads_;
    std::vector<MatrixXd> bias_mats_, bias_grad_mats_;
};

inline NetworkFit train(const NetworkConfig& cfg, const features::Design& design,
                        int val_days = -1) {
    Trainer tr(cfg, design);
    return tr.train(val_days);
}

/// Network outputs de-standardized and back-transformed to the count scale.
inline ForecastRecord forecast_day(const NetworkFit& fit, const features::Design& design,
                                   const Eigen::MatrixXd& target_features,
                                   const std::string& skill, int target_day) {
    ForecastRecord rec;
    rec.model = tag_for(fit.config.model_type, fit.config.mixed_cheat);
    rec.skill = skill;
    rec.target_day = target_day;
    rec.degraded = fit.diverged;
    VectorXd out = fit.network.forward(target_features);
    rec.predictions.resize(out.size());
    for (int p = 0; p < out.size(); ++p)
        rec.predictions[p] = inverse_transform(design.target_std.invert(out(p)));
    rec.validate();
    return rec;
}

inline nlohmann::json to_json(const NetworkFit& fit) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : fit.network.layers()) {
        nlohmann::json jl;
        jl["type"] = to_string(l.type);
        jl["in"] = l.in;
        jl["nodes"] = l.n;
        auto mat = [](const MatrixXd& m) {
            std::vector<std::vector<double>> v(m.rows());
            for (int i = 0; i < m.rows(); ++i) {
                v[i].resize(m.cols());
                for (int j = 0; j < m.cols(); ++j) v[i][j] = m(i, j);
            }
            return v;
        };
        jl["W"] = mat(l.W);
        if (l.type != CellType::Dense) jl["U"] = mat(l.U);
        jl["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
        layers.push_back(jl);
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : fit.history)
        hist.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"val_wape", h.val_wape}});
    return nlohmann::json{{"model", to_string(fit.config.model_type)},
                          {"nlayers", fit.config.nlayers},
                          {"nnodes", fit.config.nnodes},
                          {"kernel_l2", fit.config.kernel_l2},
                          {"mixed_cheat", fit.config.mixed_cheat},
                          {"seed", fit.config.seed},
                          {"chosen_epochs", fit.chosen_epochs},
                          {"refit", fit.refit},
                          {"diverged", fit.diverged},
                          {"layers", layers},
                          {"history", hist}};
}

inline void write_history_csv(std::ostream& os, const NetworkFit& fit) {
    os << "epoch,loss,val_wape\n";
    for (const auto& h : fit.history)
        os << h.epoch << ',' << h.loss << ',' << h.val_wape << "\n";
}

}  // namespace seasoncast::neural
