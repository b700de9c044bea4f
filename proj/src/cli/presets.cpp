#include "sapr/cli/presets.hpp"

namespace sapr::cli {

using nlohmann::json;

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> p;
    p.push_back({"thm1-gl", "GL mixing, all signals: N >= 4M", Command::collide,
                 {{"N", 8},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {6}}, {"seed", 11}}},
                  {"mixing", {{"kind", "general-linear"}, {"seed", 12}}},
                  {"mixings", 5},
                  {"seed", 13}}});
    p.push_back({"thm2-so", "SO mixing, all signals: N >= 4M+2", Command::collide,
                 {{"N", 10},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {6}}, {"seed", 21}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 22}}},
                  {"mixings", 5},
                  {"seed", 23},
                  {"controls", true}}});
    p.push_back({"cor-deepnet", "deep ReLU prior with image dimension M, SO mixing: N >= 4M+2", Command::collide,
                 {{"N", 10},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {8, 8}}, {"seed", 31}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 32}}},
                  {"mixings", 3},
                  {"seed", 33}}});
    p.push_back({"cor-sparse", "M-sparse prior, SO mixing: N >= 4M+2", Command::collide,
                 {{"N", 10},
                  {"prior", {{"type", "sparse"}, {"sparsity", 2}, {"basis", "generic-orthonormal"}, {"seed", 41}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 42}}},
                  {"mixings", 3},
                  {"seed", 43}}});
    p.push_back({"lemma-codim-gl", "GL fibre dimension <= N^2 - (N/2+1); N=8 gives 59", Command::probe_dim,
                 {{"N", 8}, {"manifold", "general-linear"}, {"pairs", 20}, {"seed", 51}}});
    p.push_back({"prop-codim-so", "SO fibre dimension <= dim SO(N) - (N-1)/2; N=7 gives 18", Command::probe_dim,
                 {{"N", 7}, {"manifold", "special-orthogonal"}, {"pairs", 20}, {"seed", 61}}});
    p.push_back({"codim-gl-blocks", "GL fibre, blocks (1,3,5): dimension <= N^2 - R = 78", Command::probe_dim,
                 {{"N", 9}, {"blocks", {1, 3, 5}}, {"manifold", "general-linear"}, {"pairs", 20}, {"seed", 71}}});
    p.push_back({"codim-so-blocks", "SO fibre, blocks (1,3,5): dimension <= dim SO(N) - R + 1 = 34",
                 Command::probe_dim,
                 {{"N", 9}, {"blocks", {1, 3, 5}}, {"manifold", "special-orthogonal"}, {"pairs", 20}, {"seed", 81}}});
    p.push_back({"mra-cyclic-n4", "sample complexity n ~ sigma^4 (slope-4 check), cyclic MRA N=8", Command::mra_sim,
                 {{"mode", "sample-complexity"},
                  {"group", {{"kind", "cyclic"}, {"N", 8}}},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {6}}, {"seed", 91}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 92}}},
                  {"signal", {{"latent_seed", 93}, {"norm", 0.5}}},
                  {"sigma_list", {0.5, 1.0, 2.0}},
                  {"seeds", 10},
                  {"seed", 94},
                  {"target_error", 0.1}}});
    p.push_back({"cor-sphere-so3", "band-limited sphere under SO(3): unique if L > M (SO) / L+1 > M (GL)",
                 Command::mra_sim,
                 {{"mode", "recovery"},
                  {"group", {{"kind", "so3"}, {"band_limit", 3}}},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {6}}, {"seed", 101}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 102}}},
                  {"signal", {{"latent_seed", 103}, {"norm", 1.0}}},
                  {"seeds", 5},
                  {"seed", 104},
                  {"n", 100000},
                  {"sigma", 0.1}}});
    p.push_back({"appendixB-blockscalar", "orbit second moment is block-scalar with trace |f_l|^2",
                 Command::mra_sim,
                 {{"mode", "block-scalar"},
                  {"group", {{"kind", "so3"}, {"band_limit", 4}}},
                  {"prior", {{"type", "relu"}, {"latent_dim", 2}, {"hidden", {8}}, {"seed", 111}}},
                  {"mixing", {{"kind", "special-orthogonal"}, {"seed", 112}}},
                  {"signal", {{"latent_seed", 113}, {"norm", 1.0}}},
                  {"seed", 114},
                  {"n", 100000},
                  {"sigma", 0.0}}});
    p.push_back({"sweep-so", "SO thresholds: all signals N >= 4M+2, generic N >= 2M+2", Command::sweep,
                 {{"kind", "special-orthogonal"}, {"seed", 121}}});
    p.push_back({"sweep-gl", "GL thresholds: all signals N >= 4M, generic N >= 2M", Command::sweep,
                 {{"kind", "general-linear"}, {"seed", 131}}});
    p.push_back({"measure-demo", "block energies of a 5-sample signal", Command::measure,
                 {{"x", {1, 1, 2, 2, 3}}}});
    return p;
  }();
  return all;
}

const Preset* find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

} // namespace sapr::cli
