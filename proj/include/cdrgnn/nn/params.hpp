#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cdrgnn/common/binary_io.hpp"
#include "cdrgnn/common/random.hpp"
#include "cdrgnn/nn/tensor.hpp"

namespace cdrgnn::nn {

/// Named registry of every parameter (and non-trainable buffer) of a model.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
        bool trainable = true;
    };

    explicit ParamStore(std::uint64_t init_seed = 0) : rng_(init_seed) {}

    Tensor add(const std::string& name, Matrix init, bool trainable = true) {
        if (index_.count(name)) throw ValidationError("parameter registered twice: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, trainable ? Tensor::parameter(std::move(init)) : Tensor::constant(std::move(init)),
                            trainable});
        return entries_.back().tensor;
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Tensor add_uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
        const double bound = 1.0 / std::sqrt(double(std::max<Eigen::Index>(fan_in, 1)));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng_);
        return add(name, std::move(m));
    }

    Tensor add_constant(const std::string& name, Eigen::Index rows, Eigen::Index cols, double v, bool trainable = true) {
        return add(name, Matrix::Constant(rows, cols, v), trainable);
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    const Tensor& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ValidationError("unknown parameter " + name);
        return entries_[it->second].tensor;
    }

    void zero_grad() {
        for (auto& e : entries_) e.tensor.zero_grad();
    }

    std::vector<Matrix> values() const {
        std::vector<Matrix> out;
        for (const auto& e : entries_) out.push_back(e.tensor.value());
        return out;
    }

    void set_values(const std::vector<Matrix>& v) {
        if (v.size() != entries_.size()) throw ValidationError("set_values: parameter count mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto& dst = entries_[i].tensor.mutable_value();
            if (dst.rows() != v[i].rows() || dst.cols() != v[i].cols())
                throw ValidationError("set_values: shape mismatch for " + entries_[i].name);
            dst = v[i];
        }
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += std::size_t(e.tensor.value().size());
        return n;
    }

private:
    Rng rng_;
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(ParamStore& store, AdamConfig cfg) : store_(store), cfg_(cfg) {
        for (const auto& e : store.entries()) {
            m_.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
            v_.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
        }
    }

    void step() {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        auto& entries = store_.entries();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!entries[i].trainable) continue;
            Tensor t = entries[i].tensor;
            const Matrix g = t.grad();
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
            t.mutable_value().array() -=
                cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
        }
    }

    long steps() const { return t_; }

private:
    ParamStore& store_;
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

inline constexpr char kCheckpointMagic[9] = "CDRGCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// name, rows, cols and little-endian doubles for every entry, in registration order.
inline void write_checkpoint(std::ostream& out, const ParamStore& store) {
    using namespace binary;
    write_magic(out, kCheckpointMagic);
    write_u32(out, kCheckpointVersion);
    write_u64(out, store.size());
    for (const auto& e : store.entries()) {
        write_string(out, e.name);
        write_u64(out, std::uint64_t(e.tensor.rows()));
        write_u64(out, std::uint64_t(e.tensor.cols()));
        const Matrix& v = e.tensor.value();
        for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v.data()[i]);
    }
}

/// Loads values into an identically structured store.
inline void read_checkpoint(std::istream& in, ParamStore& store) {
    using namespace binary;
    expect_magic(in, kCheckpointMagic);
    const auto version = read_u32(in);
    if (version != kCheckpointVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
    const auto n = read_u64(in);
    if (n != store.size())
        throw DataError("checkpoint holds " + std::to_string(n) + " tensors, model has " + std::to_string(store.size()));
    std::vector<Matrix> values;
    for (const auto& e : store.entries()) {
        const auto name = read_string(in);
        const auto rows = read_u64(in), cols = read_u64(in);
        if (name != e.name || Eigen::Index(rows) != e.tensor.rows() || Eigen::Index(cols) != e.tensor.cols())
            throw DataError("checkpoint entry " + name + " does not match model parameter " + e.name);
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = read_f64(in);
        values.push_back(std::move(m));
    }
    store.set_values(values);
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_checkpoint(out, store);
}

inline void load_checkpoint(const std::filesystem::path& path, ParamStore& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    read_checkpoint(in, store);
}

}  // namespace cdrgnn::nn
