#include "cvarrl/rng.hpp"

#include "cvarrl/errors.hpp"

namespace cvarrl {

uint64_t mix_seed(uint64_t root, uint64_t stream) {
    // splitmix64 finalizer over root advanced by the stream tag; cheap and
    // avalanching, so nearby (root, stream) pairs give unrelated seeds
    uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int sample_discrete(const Eigen::VectorXd& probs, Rng& rng) {
    if (probs.size() == 0)
        throw EmptySamples("sample_discrete: empty probability vector");
    const double u = uniform01(rng);
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p <= 0.0)
            continue;
        last_positive = i;
        cum += p;
        if (u < cum)
            return i;
    }
    if (last_positive < 0)
        throw InvalidModel("sample_discrete: no positive mass");
    return last_positive;
}

int sample_uniform(int num_actions, Rng& rng) {
    return std::uniform_int_distribution<int>(0, num_actions - 1)(rng);
}

Eigen::VectorXd sample_dirichlet(int length, double alpha, Rng& rng) {
    Eigen::VectorXd out(length);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double total = 0.0;
    for (int i = 0; i < length; ++i) {
        out[i] = gamma(rng);
        total += out[i];
    }
    if (total <= 0.0) {
        // all-zero gamma draws are possible for tiny alpha; fall back to uniform
        out.setConstant(1.0 / length);
        return out;
    }
    out /= total;
    return out;
}

} // namespace cvarrl
