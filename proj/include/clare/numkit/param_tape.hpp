#pragma once

#include "clare/numkit/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace clare::numkit {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Ordered, named parameter store with index-aligned gradient accumulators.
class ParamTape {
public:
    // Registers a parameter with a zeroed gradient of the same shape.
    // Returns its index. Names must be unique.
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }

    std::optional<std::size_t> find(const std::string& name) const;
    // Like find() but throws UsageError for an unknown name.
    std::size_t index_of(const std::string& name) const;

    const Tensor& value(const std::string& name) const { return params_[index_of(name)].value; }
    Tensor& value(const std::string& name) { return params_[index_of(name)].value; }

    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Parameter> params_;
};

} // namespace clare::numkit
