#include "anchormdp/model_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace anchormdp {

namespace {

constexpr const char* kModelMagic = "anchormdp-model";
constexpr const char* kPolicyMagic = "anchormdp-policy";
constexpr int kVersion = 1;

template <class T>
T read_value(std::istream& in, const char* what) {
    T value;
    if (!(in >> value)) {
        std::ostringstream msg;
        msg << "model file: could not read " << what;
        throw FormatError(msg.str());
    }
    return value;
}

Matrix read_matrix(std::istream& in, Index rows, Index cols, const char* what) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = read_value<double>(in, what);
    return m;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
        out << '\n';
    }
}

void read_magic(std::istream& in, const char* magic) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != magic) {
        std::ostringstream msg;
        msg << "expected header '" << magic << " " << kVersion << "'";
        throw FormatError(msg.str());
    }
    if (version != kVersion) {
        std::ostringstream msg;
        msg << magic << ": unsupported version " << version;
        throw FormatError(msg.str());
    }
}

}  // namespace

TabularMDP ModelFile::true_mdp() const {
    if (!true_transition) return reference.base();
    const TabularMDP& base = reference.base();
    return TabularMDP(base.num_states(), base.num_actions(), *true_transition, base.reward(),
                      base.discount());
}

RawModel read_raw_model(std::istream& in) {
    read_magic(in, kModelMagic);
    RawModel raw;
    raw.num_states = read_value<Index>(in, "|S|");
    raw.num_actions = read_value<Index>(in, "|A|");
    const auto k = read_value<Index>(in, "K");
    const auto misspecified = read_value<int>(in, "misspecification flag");
    if (raw.num_states < 1 || raw.num_actions < 1 || k < 1)
        throw FormatError("model file: dimensions must be positive");
    if (misspecified != 0 && misspecified != 1)
        throw FormatError("model file: misspecification flag must be 0 or 1");

    const Index pairs = raw.num_states * raw.num_actions;
    raw.features = read_matrix(in, pairs, k, "features");
    raw.factor = read_matrix(in, k, raw.num_states, "factor");
    raw.reward.resize(pairs);
    for (Index i = 0; i < pairs; ++i) raw.reward[i] = read_value<double>(in, "reward");
    raw.discount = read_value<double>(in, "gamma");
    raw.anchors.resize(static_cast<std::size_t>(k));
    for (auto& a : raw.anchors) a = read_value<Index>(in, "anchor index");
    if (misspecified == 1) raw.true_transition = read_matrix(in, pairs, raw.num_states, "true kernel");

    std::string trailing;
    if (in >> trailing) throw FormatError("model file: unexpected trailing content");
    return raw;
}

void write_raw_model(std::ostream& out, const RawModel& raw) {
    const auto old_precision = out.precision(17);
    out << kModelMagic << ' ' << kVersion << '\n';
    out << raw.num_states << ' ' << raw.num_actions << ' ' << raw.features.cols() << ' '
        << (raw.true_transition ? 1 : 0) << '\n';
    write_matrix(out, raw.features);
    write_matrix(out, raw.factor);
    for (Index i = 0; i < raw.reward.size(); ++i) out << (i ? " " : "") << raw.reward[i];
    out << '\n' << raw.discount << '\n';
    for (std::size_t i = 0; i < raw.anchors.size(); ++i) out << (i ? " " : "") << raw.anchors[i];
    out << '\n';
    if (raw.true_transition) write_matrix(out, *raw.true_transition);
    out.precision(old_precision);
}

ModelFile validate_model(const RawModel& raw) {
    LinearMDP reference = LinearMDP::from_factors(raw.num_states, raw.num_actions, raw.features,
                                                  raw.factor, raw.reward, raw.discount);
    AnchorSet anchors = build_anchor_set(reference, raw.anchors);
    ModelFile model{std::move(reference), std::move(anchors), raw.true_transition};
    if (model.true_transition) (void)model.true_mdp();
    return model;
}

RawModel to_raw(const ModelFile& model) {
    const TabularMDP& base = model.reference.base();
    return RawModel{base.num_states(), base.num_actions(), model.reference.features(),
                    model.reference.factor(), base.reward(), base.discount(),
                    model.anchors.pairs, model.true_transition};
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model file '" + path + "'");
    return validate_model(read_raw_model(in));
}

void save_model(const std::string& path, const ModelFile& model) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write model file '" + path + "'");
    write_raw_model(out, to_raw(model));
    if (!out) throw FormatError("error while writing model file '" + path + "'");
}

void write_policy(std::ostream& out, const Policy& pi) {
    out << kPolicyMagic << ' ' << kVersion << '\n' << pi.action.size() << '\n';
    for (std::size_t s = 0; s < pi.action.size(); ++s) out << (s ? " " : "") << pi.action[s];
    out << '\n';
}

Policy read_policy(std::istream& in) {
    read_magic(in, kPolicyMagic);
    const auto n = read_value<Index>(in, "policy length");
    if (n < 1) throw FormatError("policy file: length must be positive");
    Policy pi{std::vector<Index>(static_cast<std::size_t>(n))};
    for (auto& a : pi.action) a = read_value<Index>(in, "action");
    return pi;
}

}  // namespace anchormdp
