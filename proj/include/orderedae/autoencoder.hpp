#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "orderedae/activation.hpp"
#include "orderedae/matrix.hpp"
#include "orderedae/rng.hpp"

namespace oae {

struct LayerSpec {
    std::size_t width = 1;
    Activation activation = Activation::Tanh;
    bool use_bias = false;
};

/// Fixed (never trained) skip path added around the encoder or decoder MLP.
struct Skip {
    enum class Kind { None, Identity, Fixed };
    Kind kind = Kind::None;
    Matrix matrix;  ///< only for Kind::Fixed

    static Skip none() { return {}; }
    static Skip identity() { return {Kind::Identity, {}}; }
    static Skip fixed(Matrix m) { return {Kind::Fixed, std::move(m)}; }

    bool active() const noexcept { return kind != Kind::None; }
    /// The out x in matrix this skip applies (zero for None, I_[out x in] for Identity).
    Matrix materialize(std::size_t out, std::size_t in) const;
};

std::string_view to_string(Skip::Kind k) noexcept;
Skip::Kind skip_kind_from_string(std::string_view name);

/// Layer widths and skip paths. The last encoder layer has width m, the last
/// decoder layer width n.
struct Architecture {
    std::size_t n = 0;
    std::vector<LayerSpec> encoder;
    std::vector<LayerSpec> decoder;
    Skip encoder_skip;
    Skip decoder_skip;

    std::size_t m() const { return encoder.empty() ? 0 : encoder.back().width; }

    /// Hidden layers use `hidden`, output layers are Linear, no biases.
    /// This is the configuration under which relations can be extracted.
    static Architecture extraction(std::size_t n, std::size_t m, std::vector<std::size_t> encoder_hidden,
                                   std::vector<std::size_t> decoder_hidden, Skip encoder_skip = Skip::none(),
                                   Skip decoder_skip = Skip::none(), Activation hidden = Activation::Tanh);

    /// Throws ContractError if the widths or skip shapes do not compose.
    void validate() const;
};

struct Layer {
    Matrix weights;  ///< width x fan_in
    Vector bias;     ///< empty when the layer has no bias
    Activation activation = Activation::Tanh;

    bool has_bias() const noexcept { return !bias.empty(); }
};

/// Encoder layers A_1..A_E followed by decoder layers A_{E+1}..A_{E+D}.
class AutoencoderModel {
public:
    AutoencoderModel() = default;
    /// All trainable parameters zero.
    explicit AutoencoderModel(const Architecture& arch);
    /// Weights uniform on ±1/sqrt(fan_in), biases zero.
    static AutoencoderModel random(const Architecture& arch, Rng& rng);

    const Architecture& architecture() const noexcept { return arch_; }
    std::size_t n() const noexcept { return arch_.n; }
    std::size_t m() const noexcept { return arch_.m(); }
    std::size_t num_encoder_layers() const noexcept { return arch_.encoder.size(); }
    std::size_t num_decoder_layers() const noexcept { return arch_.decoder.size(); }
    const Skip& encoder_skip() const noexcept { return arch_.encoder_skip; }
    const Skip& decoder_skip() const noexcept { return arch_.decoder_skip; }

    std::span<const Layer> layers() const noexcept { return layers_; }
    std::span<const Layer> encoder_layers() const noexcept { return {layers_.data(), arch_.encoder.size()}; }
    std::span<const Layer> decoder_layers() const noexcept {
        return {layers_.data() + arch_.encoder.size(), arch_.decoder.size()};
    }
    Layer& layer(std::size_t i) { return layers_.at(i); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }

    /// Flat parameter vector: per layer, weights row-major then bias.
    std::size_t param_count() const noexcept;
    Vector params() const;
    void set_params(std::span<const double> p);
    /// Offset of layer i's weights within the flat vector.
    std::size_t weight_offset(std::size_t layer_index) const;

    /// Output layers linear and every bias zero or absent.
    bool extraction_mode() const noexcept;

    friend bool operator==(const AutoencoderModel& a, const AutoencoderModel& b);

private:
    Architecture arch_;
    std::vector<Layer> layers_;
};

struct ForwardResult {
    Matrix y;     ///< m x N latent
    Matrix xhat;  ///< n x N reconstruction
    /// Per layer: input u_i and output v_i = σ(A_i u_i + b_i).
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;
};

/// y = skip_e·x + e_NN(x), x̂ = skip_d·y + d_NN(y), columnwise.
ForwardResult forward(const AutoencoderModel& mdl, const Matrix& x);

/// Loss weights for J = α‖X − X̂‖²_F + β‖Q^½(Y − Ȳ)‖²_F + γ‖A‖²_F.
struct LossConfig {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.1;
    Vector q;  ///< ordering weights, nondecreasing and nonnegative

    /// Throws ContractError for negative weights, a wrong q length, or a decreasing q.
    void validate(std::size_t m) const;
    /// True when q is strictly increasing (ties are allowed but weaken the ordering).
    bool strictly_increasing() const noexcept;
};

struct LossTerms {
    double j = 0.0;
    double j1 = 0.0;
    double j2 = 0.0;
    double j3 = 0.0;
};

LossTerms loss(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg);
/// ∇J with respect to params(), by reverse accumulation.
Vector loss_grad(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg);
/// Both at once; `grad` must have param_count() entries.
LossTerms loss_and_grad(const AutoencoderModel& mdl, const Matrix& x, const LossConfig& cfg, std::span<double> grad);

/// Sub-blocks used in relation extraction: rows of the final encoder weight
/// split at p, columns of the first encoder weight split at p.
struct EncoderPartition {
    Matrix a_ep;  ///< first p rows of A_E
    Matrix a_er;  ///< last m − p rows of A_E
    Matrix a_1p;  ///< first p columns of A_1
    Matrix a_1r;  ///< last n − p columns of A_1
};

/// Requires 1 <= p < m (and p < n for the A_1 split).
EncoderPartition partition(const AutoencoderModel& mdl, std::size_t p);

}  // namespace oae
