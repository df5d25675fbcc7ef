#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

// Energy-target abstraction the samplers operate on. The posterior evaluator
// implements it with incremental caches; toy targets wrap a plain function.

namespace hhmm {

enum class MoveKind {
    Scalar,     // Gaussian random walk on each index, natural scale
    SimplexRow, // same walk, plus the implied completion entry must stay valid
};

struct Block {
    std::string name;
    MoveKind kind = MoveKind::Scalar;
    std::vector<int> indices;
};

// Update schedule: the blocks, visited in order, once per sweep.
struct Layout {
    std::vector<Block> blocks;
    int dim = 0;

    // Every parameter index must appear in exactly one block.
    void validate() const; // throws std::invalid_argument
};

class EnergyTarget {
public:
    virtual ~EnergyTarget() = default;

    virtual int dim() const = 0;

    // Full evaluation at theta; commits theta as the current point.
    virtual double full_energy(std::span<const double> theta) = 0;

    // Evaluation at a proposal differing from the current point only inside
    // `changed`. Must be followed by exactly one accept_proposal() or
    // reject_proposal() before the next call.
    virtual double propose_energy(std::span<const double> theta, const Block& changed) = 0;

    virtual void accept_proposal() = 0;
    virtual void reject_proposal() = 0;
};

// Stateless target evaluating an arbitrary energy function; block structure is
// ignored. Used by toy problems and the tempering tests.
class FunctionTarget final : public EnergyTarget {
public:
    FunctionTarget(int dim, std::function<double(std::span<const double>)> fn)
        : dim_(dim), fn_(std::move(fn)) {}

    int dim() const override { return dim_; }
    double full_energy(std::span<const double> theta) override { return fn_(theta); }
    double propose_energy(std::span<const double> theta, const Block&) override {
        return fn_(theta);
    }
    void accept_proposal() override {}
    void reject_proposal() override {}

private:
    int dim_;
    std::function<double(std::span<const double>)> fn_;
};

} // namespace hhmm
