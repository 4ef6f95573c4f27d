#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "omnisonic/autodiff.hpp"
#include "omnisonic/rng.hpp"
#include "omnisonic/tensor.hpp"

namespace omnisonic {

// Named trainable leaves in registration order (the order fixes optimizer
// state layout and checkpoint serialization).
template <class S>
struct ParamStore {
    std::vector<std::string> names;
    std::unordered_map<std::string, NodePtr<S>> map;

    NodePtr<S> add(const std::string& name, TensorT<S> init) {
        if (map.count(name)) fail("param already registered: " + name);
        auto n = leaf(std::move(init));
        names.push_back(name);
        map.emplace(name, n);
        return n;
    }

    NodePtr<S> get(const std::string& name) const {
        auto it = map.find(name);
        if (it == map.end()) fail("unknown param: " + name);
        return it->second;
    }

    void zero_grads() {
        for (const auto& name : names) {
            auto& p = *map.at(name);
            p.ensure_grad();
            p.zero_grad();
        }
    }

    size_t total_elems() const {
        size_t n = 0;
        for (const auto& name : names) n += map.at(name)->value.numel();
        return n;
    }
};

// Draw init values in double so float and double instantiations of the same
// seed hold identical parameters (up to storage rounding).
template <class S>
TensorT<S> init_normal(std::vector<int> shape, Rng& rng, double stddev) {
    TensorT<double> t = TensorT<double>::randn(std::move(shape), rng, stddev);
    return t.template cast<S>();
}

}  // namespace omnisonic
