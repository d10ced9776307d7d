#include "orderedae/autoencoder.hpp"

#include <cmath>
#include <string>

#include "orderedae/errors.hpp"

namespace oae {

Matrix Skip::materialize(std::size_t out, std::size_t in) const {
    switch (kind) {
        case Kind::None: return Matrix(out, in);
        case Kind::Identity: return Matrix::identity(out, in);
        case Kind::Fixed:
            if (matrix.rows() != out || matrix.cols() != in) {
                throw ContractError("Skip: fixed matrix is " + std::to_string(matrix.rows()) + "x" +
                                    std::to_string(matrix.cols()) + ", expected " + std::to_string(out) + "x" +
                                    std::to_string(in));
            }
            return matrix;
    }
    return Matrix(out, in);
}

std::string_view to_string(Skip::Kind k) noexcept {
    switch (k) {
        case Skip::Kind::None: return "none";
        case Skip::Kind::Identity: return "identity";
        case Skip::Kind::Fixed: return "fixed";
    }
    return "none";
}

Skip::Kind skip_kind_from_string(std::string_view name) {
    if (name == "none") return Skip::Kind::None;
    if (name == "identity") return Skip::Kind::Identity;
    if (name == "fixed") return Skip::Kind::Fixed;
    throw ContractError("unknown skip kind '" + std::string(name) + "'");
}

Architecture Architecture::extraction(std::size_t n, std::size_t m, std::vector<std::size_t> encoder_hidden,
                                      std::vector<std::size_t> decoder_hidden, Skip encoder_skip, Skip decoder_skip,
                                      Activation hidden) {
    Architecture a;
    a.n = n;
    for (std::size_t w : encoder_hidden) a.encoder.push_back({w, hidden, false});
    a.encoder.push_back({m, Activation::Linear, false});
    for (std::size_t w : decoder_hidden) a.decoder.push_back({w, hidden, false});
    a.decoder.push_back({n, Activation::Linear, false});
    a.encoder_skip = std::move(encoder_skip);
    a.decoder_skip = std::move(decoder_skip);
    a.validate();
    return a;
}

void Architecture::validate() const {
    if (n == 0) throw ContractError("Architecture: input dimension must be positive");
    if (encoder.empty() || decoder.empty()) throw ContractError("Architecture: encoder and decoder need a layer each");
    for (const auto& l : encoder)
        if (l.width == 0) throw ContractError("Architecture: encoder layer of width 0");
    for (const auto& l : decoder)
        if (l.width == 0) throw ContractError("Architecture: decoder layer of width 0");
    if (decoder.back().width != n) {
        throw ContractError("Architecture: decoder output width " + std::to_string(decoder.back().width) +
                            " must equal n = " + std::to_string(n));
    }
    if (encoder_skip.kind == Skip::Kind::Fixed) (void)encoder_skip.materialize(m(), n);
    if (decoder_skip.kind == Skip::Kind::Fixed) (void)decoder_skip.materialize(n, m());
}

AutoencoderModel::AutoencoderModel(const Architecture& arch) : arch_(arch) {
    arch_.validate();
    std::size_t fan_in = arch_.n;
    auto add = [&](const LayerSpec& spec) {
        Layer l;
        l.weights = Matrix(spec.width, fan_in);
        if (spec.use_bias) l.bias.assign(spec.width, 0.0);
        l.activation = spec.activation;
        layers_.push_back(std::move(l));
        fan_in = spec.width;
    };
    for (const auto& s : arch_.encoder) add(s);
    for (const auto& s : arch_.decoder) add(s);
}

AutoencoderModel AutoencoderModel::random(const Architecture& arch, Rng& rng) {
    AutoencoderModel mdl(arch);
    for (auto& l : mdl.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.weights.cols()));
        for (double& w : l.weights.data()) w = rng.uniform(-bound, bound);
    }
    return mdl;
}

std::size_t AutoencoderModel::param_count() const noexcept {
    std::size_t c = 0;
    for (const auto& l : layers_) c += l.weights.size() + l.bias.size();
    return c;
}

Vector AutoencoderModel::params() const {
    Vector p;
    p.reserve(param_count());
    for (const auto& l : layers_) {
        p.insert(p.end(), l.weights.data().begin(), l.weights.data().end());
        p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
}

void AutoencoderModel::set_params(std::span<const double> p) {
    if (p.size() != param_count()) {
        throw ContractError("set_params: got " + std::to_string(p.size()) + " values, model has " +
                            std::to_string(param_count()));
    }
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (double& w : l.weights.data()) w = p[k++];
        for (double& b : l.bias) b = p[k++];
    }
}

std::size_t AutoencoderModel::weight_offset(std::size_t layer_index) const {
    if (layer_index >= layers_.size()) throw ContractError("weight_offset: layer index out of range");
    std::size_t off = 0;
    for (std::size_t i = 0; i < layer_index; ++i) off += layers_[i].weights.size() + layers_[i].bias.size();
    return off;
}

bool AutoencoderModel::extraction_mode() const noexcept {
    if (layers_.empty()) return false;
    if (layers_[arch_.encoder.size() - 1].activation != Activation::Linear) return false;
    if (layers_.back().activation != Activation::Linear) return false;
    for (const auto& l : layers_)
        for (double b : l.bias)
            if (b != 0.0) return false;
    return true;
}

bool operator==(const AutoencoderModel& a, const AutoencoderModel& b) {
    if (a.layers_.size() != b.layers_.size() || a.arch_.n != b.arch_.n) return false;
    if (a.arch_.encoder.size() != b.arch_.encoder.size()) return false;
    if (a.arch_.encoder_skip.kind != b.arch_.encoder_skip.kind ||
        a.arch_.decoder_skip.kind != b.arch_.decoder_skip.kind ||
        !(a.arch_.encoder_skip.matrix == b.arch_.encoder_skip.matrix) ||
        !(a.arch_.decoder_skip.matrix == b.arch_.decoder_skip.matrix)) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        const Layer& la = a.layers_[i];
        const Layer& lb = b.layers_[i];
        if (la.activation != lb.activation || !(la.weights == lb.weights) || la.bias != lb.bias) return false;
    }
    return true;
}

namespace {

// v = σ(W u + b·1ᵀ)
Matrix apply_layer(const Layer& l, const Matrix& u) {
    Matrix z = matmul(l.weights, u);
    if (l.has_bias()) {
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (double& v : z.row(i)) v += l.bias[i];
    }
    if (l.activation == Activation::Tanh)
        for (double& v : z.data()) v = std::tanh(v);
    return z;
}

// Adds skip·in to out (skip is out.rows() x in.rows()).
void add_skip(const Skip& skip, const Matrix& in, Matrix& out) {
    switch (skip.kind) {
        case Skip::Kind::None: return;
        case Skip::Kind::Identity: {
            const std::size_t k = std::min(in.rows(), out.rows());
            for (std::size_t i = 0; i < k; ++i) {
                auto o = out.row(i);
                auto s = in.row(i);
                for (std::size_t j = 0; j < o.size(); ++j) o[j] += s[j];
            }
            return;
        }
        case Skip::Kind::Fixed: out += matmul(skip.matrix, in); return;
    }
}

// Adds skipᵀ·g to acc.
void add_skip_transpose(const Skip& skip, const Matrix& g, Matrix& acc) {
    switch (skip.kind) {
        case Skip::Kind::None: return;
        case Skip::Kind::Identity: {
            const std::size_t k = std::min(g.rows(), acc.rows());
            for (std::size_t i = 0; i < k; ++i) {
                auto a = acc.row(i);
                auto s = g.row(i);
                for (std::size_t j = 0; j < a.size(); ++j) a[j] += s[j];
            }
            return;
        }
        case Skip::Kind::Fixed: acc += matmul_tn(skip.matrix, g); return;
    }
}

void check_input(const AutoencoderModel& mdl, const Matrix& x) {
    if (x.rows() != mdl.n()) {
        throw ContractError("forward: input has " + std::to_string(x.rows()) + " rows, model expects " +
                            std::to_string(mdl.n()));
    }
}

// Backpropagates d(out of layer `last`) down to the input of layer `first`,
// writing parameter gradients into grad. Returns dJ/d(input of `first`)
// when `need_input_grad`, else an empty matrix.
Matrix backprop_chain(const AutoencoderModel& mdl, const ForwardResult& fw, std::size_t first, std::size_t last,
                      Matrix dout, std::span<double> grad, bool need_input_grad) {
    for (std::size_t i = last + 1; i-- > first;) {
        const Layer& l = mdl.layer(i);
        const Matrix& v = fw.outputs[i];
        if (l.activation == Activation::Tanh) {
            auto dd = dout.data();
            auto vd = v.data();
            for (std::size_t k = 0; k < dd.size(); ++k) dd[k] *= 1.0 - vd[k] * vd[k];
        }
        const Matrix dw = matmul_nt(dout, fw.inputs[i]);
        std::size_t off = mdl.weight_offset(i);
        for (double g : dw.data()) grad[off++] += g;
        if (l.has_bias()) {
            for (std::size_t r = 0; r < dout.rows(); ++r) {
                double s = 0.0;
                for (double g : dout.row(r)) s += g;
                grad[off++] += s;
            }
        }
        if (i > first || need_input_grad) dout = matmul_tn(l.weights, dout);
    }
    return need_input_grad ? dout : Matrix{};
}

}  // namespace

ForwardResult forward(const AutoencoderModel& mdl, const Matrix& x) {
    check_input(mdl, x);
    const std::size_t e = mdl.num_encoder_layers();
    const std::size_t total = mdl.layers().size();
    ForwardResult fw;
    fw.inputs.reserve(total);
    fw.outputs.reserve(total);

    const Matrix* u = &x;
    for (std::size_t i = 0; i < e; ++i) {
        fw.inputs.push_back(*u);
        fw.outputs.push_back(apply_layer(mdl.layer(i), *u));
        u = &fw.outputs.back();
    }
    fw.y = fw.outputs.back();
    add_skip(mdl.encoder_skip(), x, fw.y);

    u = &fw.y;
    for (std::size_t i = e; i < total; ++i) {
        fw.inputs.push_back(*u);
        fw.outputs.push_back(apply_layer(mdl.layer(i), *u));
        u = &fw.outputs.back();
    }
    fw.xhat = fw.outputs.back();
    add_skip(mdl.decoder_skip(), fw.y, fw.xhat);
    return fw;
}

void LossConfig::validate(std::size_t m) const {
    if (alpha < 0 || beta < 0 || gamma < 0) throw ContractError("LossConfig: alpha, beta, gamma must be nonnegative");
    if (q.size() != m) {
        throw ContractError("LossConfig: q has " + std::to_string(q.size()) + " entries, latent dimension is " +
                            std::to_string(m));
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] >= 0)) throw ContractError("LossConfig: ordering weights must be nonnegative");
        if (i > 0 && q[i] < q[i - 1]) throw ContractError("LossConfig: ordering weights must be nondecreasing");
    }
}

bool LossConfig::strictly_increasing() const noexcept {
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1])) return false;
    return true;
}

namespace {

double weighted_variance_sum(const Matrix& y, std::span<const double> q) {
    const Vector mu = row_means(y);
    double s = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double r = 0.0;
        for (double v : y.row(i)) r += (v - mu[i]) * (v - mu[i]);
        s += q[i] * r;
    }
    return s;
}

LossTerms terms_from_forward(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg,
                             const ForwardResult& fw) {
    LossTerms t;
    t.j1 = cfg.alpha * frobenius_sq(x - fw.xhat);
    t.j2 = cfg.beta * weighted_variance_sum(fw.y, cfg.q);
    double reg = 0.0;
    for (const auto& l : mdl.layers()) {
        reg += frobenius_sq(l.weights);
        for (double b : l.bias) reg += b * b;
    }
    t.j3 = cfg.gamma * reg;
    t.j = t.j1 + t.j2 + t.j3;
    return t;
}

}  // namespace

LossTerms loss(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg) {
    if (x.cols() < 2) throw ContractError("loss: need at least two samples");
    cfg.validate(mdl.m());
    return terms_from_forward(mdl, x, cfg, forward(mdl, x));
}

LossTerms loss_and_grad(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg, std::span<double> grad) {
    if (x.cols() < 2) throw ContractError("loss: need at least two samples");
    if (grad.size() != mdl.param_count()) throw ContractError("loss_and_grad: gradient buffer has wrong length");
    cfg.validate(mdl.m());
    const ForwardResult fw = forward(mdl, x);
    const LossTerms t = terms_from_forward(mdl, x, cfg, fw);

    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t e = mdl.num_encoder_layers();
    const std::size_t total = mdl.layers().size();

    // dJ1/dX̂ = 2α(X̂ − X)
    Matrix dxhat = fw.xhat - x;
    dxhat *= 2.0 * cfg.alpha;

    Matrix dy = backprop_chain(mdl, fw, e, total - 1, dxhat, grad, true);
    add_skip_transpose(mdl.decoder_skip(), dxhat, dy);

    // dJ2/dY = 2βQ(Y − Ȳ); the mean's own dependence on Y cancels.
    const Vector mu = row_means(fw.y);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        const double c = 2.0 * cfg.beta * cfg.q[i];
        auto d = dy.row(i);
        auto yv = fw.y.row(i);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += c * (yv[j] - mu[i]);
    }
    backprop_chain(mdl, fw, 0, e - 1, std::move(dy), grad, false);

    std::size_t k = 0;
    for (const auto& l : mdl.layers()) {
        for (double w : l.weights.data()) grad[k++] += 2.0 * cfg.gamma * w;
        for (double b : l.bias) grad[k++] += 2.0 * cfg.gamma * b;
    }
    return t;
}

Vector loss_grad(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg) {
    Vector g(mdl.param_count());
    loss_and_grad(mdl, x, cfg, g);
    return g;
}

EncoderPartition partition(const AutoencoderModel& mdl, std::size_t p) {
    const std::size_t m = mdl.m();
    const std::size_t n = mdl.n();
    if (p < 1 || p >= m || p >= n) {
        throw ContractError("partition: p = " + std::to_string(p) + " must satisfy 1 <= p < min(m, n) = " +
                            std::to_string(std::min(m, n)));
    }
    const Matrix& a_e = mdl.layer(mdl.num_encoder_layers() - 1).weights;
    const Matrix& a_1 = mdl.layer(0).weights;
    EncoderPartition part;
    part.a_ep = a_e.block(0, 0, p, a_e.cols());
    part.a_er = a_e.block(p, 0, m - p, a_e.cols());
    part.a_1p = a_1.block(0, 0, a_1.rows(), p);
    part.a_1r = a_1.block(0, p, a_1.rows(), n - p);
    return part;
}

}  // namespace oae
