#pragma once

#include <cstdint>
#include <random>

#include <boost/random/mersenne_twister.hpp>

#include <boost/random/normal_distribution.hpp>

namespace tlab {

// splitmix64 finalizer; used as a counter-based mixer so that the stream of
// replica r does not depend on how many replicas are requested.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t index = 0) {
    return mix64(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ index);
}

using Engine = boost::random::mt19937_64;

// Ziggurat normal sampler (boost) on top of a standard engine.
class NormalSource {
public:
    explicit NormalSource(uint64_t seed = 0) : eng_(seed) {}
    double operator()() { return dist_(eng_); }
    double uniform() { return std::generate_canonical<double, 53>(eng_); }
    Engine& engine() { return eng_; }
    const Engine& engine() const { return eng_; }

private:
    Engine eng_;
    boost::random::normal_distribution<double> dist_;
};

}  // namespace tlab
