#pragma once

// Command-line front end. run() never throws: 0 = success, 1 = failed
// equivariance check, 2 = usage, config, model or runtime error.

#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eqnn/eqnn.hpp"

namespace eqnn::cli {

namespace detail {

inline std::string signed_vector(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::string(v[i] > 0 ? "+" : "") + format_real(v[i], false);
  return s + ")";
}

inline void print_matrix(std::ostream& out, const Matrix& m, bool exact) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << "   ";
    for (std::size_t j = 0; j < m.cols(); ++j) out << ' ' << format_real(m(i, j), exact);
    out << '\n';
  }
}

inline void print_report(std::ostream& out, const Report& r, double tol, bool exact) {
  out << "max residual " << format_real(r.max_residual, exact) << " (tol " << format_real(tol, exact) << ")\n";
  if (r.pass) {
    out << "PASS\n";
    return;
  }
  out << "FAIL\n";
  if (r.witness) {
    out << "witness: element " << r.witness->element << ", input " << format_vector(r.witness->input, exact) << '\n';
    out << "  f(rho_in(g) v)  = " << format_vector(r.witness->transformed_output, exact) << '\n';
    out << "  rho_out(g) f(v) = " << format_vector(r.witness->output_transformed, exact) << '\n';
  }
}

inline int cmd_basis(std::ostream& out, const std::string& path, int layer, bool print, bool exact) {
  const Config cfg = load_config(path);
  const std::size_t k = cfg.reps.size() - 1;
  if (layer != 0 && (layer < 1 || static_cast<std::size_t>(layer) > k)) {
    throw ParseError("--layer", "layer must be between 1 and " + std::to_string(k));
  }
  out << "group " << cfg.group_spec << " (order " << cfg.group->order() << ")\n";
  for (std::size_t i = 1; i <= k; ++i) {
    if (layer != 0 && static_cast<std::size_t>(layer) != i) continue;
    const IntertwinerBasis basis = solve_basis(cfg.reps[i - 1], cfg.reps[i]);
    out << "layer " << i << ": " << cfg.rep_specs[i - 1] << " -> " << cfg.rep_specs[i] << "  dim " << basis.dim()
        << "  oracle " << hom_dim_oracle(cfg.reps[i - 1], cfg.reps[i]) << '\n';
    if (print) {
      for (std::size_t j = 0; j < basis.dim(); ++j) {
        out << "  B" << j << " =\n";
        print_matrix(out, basis.basis[j], exact);
      }
    }
  }
  return 0;
}

inline int cmd_check(std::ostream& out, const std::string& path, std::size_t trials, double tol, std::uint64_t seed,
                     bool exact) {
  const EquivariantNetwork net = load_model(path);
  const Report r = check_equivariance(net, trials, seed, tol);
  out << "group " << net.group->name() << ", " << r.elements_checked << " elements"
      << (net.group->order() <= kExhaustiveLimit ? " (exhaustive)" : " (sampled)") << ", " << r.inputs_checked
      << " inputs\n";
  print_report(out, r, tol, exact);
  return r.pass ? 0 : 1;
}

struct TrainOptions {
  std::string task = "center-of-mass";
  std::size_t m = 5;
  std::size_t steps = 10000;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::string out;
  std::string activation = "tanh";
  std::size_t train_samples = 2000;
  std::size_t test_samples = 500;
};

inline int cmd_train(std::ostream& out, const TrainOptions& o, bool exact) {
  if (o.task != "center-of-mass") throw ParseError("--task", "unknown task '" + o.task + "'");
  if (o.m == 0) throw ParseError("--m", "need at least one point");
  const ActivationSpec act = [&] {
    try {
      return ActivationSpec::parse(o.activation);
    } catch (const Error& e) {
      throw ParseError("--activation", e.what());
    }
  }();
  auto group = std::make_shared<const FiniteGroup>(named_group(NamedGroupSpec{NamedGroupSpec::Kind::symmetric, o.m}));
  const Dataset train_data = com_dataset(o.m, o.train_samples, o.seed);
  const Dataset test_data = com_dataset(o.m, o.test_samples, o.seed + 1000003);
  EquivariantNetwork net = build(group, deep_sets_chain(group, 3, 3), act, o.seed);
  const TrainResult result = train(std::move(net), train_data, o.steps, o.lr, o.seed);
  const ParameterCount pc = count_parameters(result.net);

  out << "task center-of-mass, m = " << o.m << ", activation " << act.to_string() << ", " << o.train_samples
      << " train / " << o.test_samples << " test samples\n";
  out << "steps " << o.steps << ", learning rate " << format_real(o.lr, exact) << '\n';
  out << "train mse " << format_real(mse(result.net, train_data), exact) << '\n';
  out << "test mse " << format_real(mse(result.net, test_data), exact) << '\n';
  out << "parameters " << pc.equivariant << " (dense " << pc.dense << ", ratio " << format_real(pc.ratio(), exact)
      << ")\n";
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write model to " + o.out);
    save_model(f, result.net);
    out << "model written to " << o.out << '\n';
  }
  return 0;
}

inline int cmd_count(std::ostream& out, const std::string& structure, std::size_t k, std::size_t n, std::size_t m1,
                     std::size_t m2) {
  Structure s;
  try {
    s = parse_structure(structure);
  } catch (const Error& e) {
    throw ParseError("--structure", e.what());
  }
  if (s == Structure::bttb && (m1 == 0 || m2 == 0)) throw ParseError("--m1/--m2", "bttb needs --m1 and --m2");
  if (s != Structure::bttb && n == 0) throw ParseError("--n", structure + " needs --n");
  out << param_count(s, k, LayerDims{n, m1, m2}) << '\n';
  return 0;
}

// Paper's worked example: X is the cyclic shift (Xv)_i = v_{i+1} and sigma
// the +-1 threshold at 3.0.
inline void demo_threshold(std::ostream& out, const Vector& bias, bool exact) {
  const bool with_bias = max_abs(bias) > 0.0;
  auto group = std::make_shared<const FiniteGroup>(named_group("cyclic(3)"));
  const Representation rep = defining_rep(group);
  const Matrix& x = rep.gen_image(0);
  const Matrix x_inv = rep.image(group->inverse(group->cayley(0, 0)));
  const ActivationSpec sigma = ActivationSpec::sign_threshold(3.0);
  const Vector v{2.1, 3.4, 0.2};

  const std::string s = with_bias ? "sigma_b" : "sigma";
  const Vector xv = x * v;
  const Vector sxv = apply_pointwise(sigma, bias, xv);
  const Vector back = x_inv * sxv;
  const Vector sv = apply_pointwise(sigma, bias, v);
  const bool equal = back == sv;

  out << "activation " << sigma.to_string() << ", b = " << format_vector(bias, exact) << '\n';
  out << "X = cyclic shift, (X v)_i = v_{i+1}\n";
  out << "v                    = " << format_vector(v, exact) << '\n';
  out << "X v                  = " << format_vector(xv, exact) << '\n';
  out << s << "(X v)" << std::string(with_bias ? 8 : 10, ' ') << " = " << signed_vector(sxv) << '\n';
  out << "X^-1 " << s << "(X v)" << std::string(with_bias ? 3 : 5, ' ') << " = " << signed_vector(back) << '\n';
  out << s << "(v)" << std::string(with_bias ? 10 : 12, ' ') << " = " << signed_vector(sv) << '\n';
  out << "X^-1 " << s << " X " << (equal ? "==" : "!=") << ' ' << s << '\n';
}

inline void print_image(std::ostream& out, const std::string& label, const GridImage& img) {
  out << label << '\n';
  for (std::size_t r = 0; r < img.side; ++r) {
    out << "   ";
    for (std::size_t c = 0; c < img.side; ++c) {
      out << " [" << img.at(r, c, 0) << ' ' << img.at(r, c, 1) << ' ' << img.at(r, c, 2) << ']';
    }
    out << '\n';
  }
}

// `image_path` replaces the built-in 3x3 image; `out_path` receives f(v).
inline void demo_decolor_flip(std::ostream& out, const std::string& image_path, const std::string& out_path) {
  GridImage img(3);
  const double px[9][3] = {{0, 0, 0},   {12, 200, 7}, {255, 255, 255}, {1, 0, 0}, {0, 0, 0},
                           {40, 40, 40}, {0, 0, 3},    {90, 0, 180},    {0, 0, 0}};
  for (std::size_t p = 0; p < 9; ++p)
    for (std::size_t ch = 0; ch < 3; ++ch) img.values[p * 3 + ch] = px[p][ch];
  if (!image_path.empty()) {
    std::ifstream in(image_path);
    if (!in) throw ParseError(image_path, "cannot open image file");
    try {
      img = read_image(in);
    } catch (const Error& e) {
      throw ParseError(image_path, e.what());
    }
  }

  print_image(out, "image v", img);
  for (FlipAxis axis : {FlipAxis::top_bottom, FlipAxis::left_right}) {
    const std::string name = axis == FlipAxis::top_bottom ? "top-bottom" : "left-right";
    const GridImage a = decolor(flip(img, axis));
    const GridImage b = flip(decolor(img), axis);
    print_image(out, "f(x.v), x = " + name + " flip", a);
    print_image(out, "x.f(v), x = " + name + " flip", b);
    out << "f(x.v) " << (a == b ? "==" : "!=") << " x.f(v)\n";
  }
  SplitMix64 rng(0);
  std::size_t agree = 0;
  for (int t = 0; t < 100; ++t) {
    const GridImage r = random_image(8, rng);
    const FlipAxis axis = t % 2 ? FlipAxis::left_right : FlipAxis::top_bottom;
    if (decolor(flip(r, axis)) == flip(decolor(r), axis)) ++agree;
  }
  out << "random 8x8 images (seed 0): " << agree << "/100 commuting squares bit-exact\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write image to " + out_path);
    write_image(f, decolor(img));
    out << "f(v) written to " << out_path << '\n';
  }
}

inline void demo_antisymmetry(std::ostream& out, bool exact) {
  const Vector u{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
  std::vector<Feature> phi;
  for (int j = 0; j < 3; ++j) phi.push_back([u, j](std::span<const double> v) { return std::pow(dot(v, u), j); });
  const Particles v{{0.5, -0.2, 0.1}, {-0.3, 0.8, 0.4}, {0.9, 0.1, -0.6}};
  const double f0 = slater_det(phi, v);
  out << "f = det[phi_j(v_i)], phi_j(v) = (v.u)^j, u = (1/3, 2/3, 2/3)\n";
  for (const auto& p : all_permutations(3)) {
    Particles pv{v[p[0]], v[p[1]], v[p[2]]};
    const double fp = slater_det(phi, pv);
    const int sign = permutation_sign(p);
    out << "pi = (" << p[0] + 1 << ' ' << p[1] + 1 << ' ' << p[2] + 1 << ")  sign " << (sign > 0 ? "+1" : "-1")
        << "  f(v_pi) = " << format_real(fp, exact) << "  sign * f(v) = " << format_real(sign * f0, exact) << '\n';
  }
  const Particles same{v[0], v[0], v[2]};
  out << "v_1 = v_2: f = " << format_real(slater_det(phi, same), exact) << '\n';
}

inline int cmd_demo(std::ostream& out, const std::string& example, const std::string& image_path,
                    const std::string& out_path, bool exact) {
  if (example != "decolor-flip" && (!image_path.empty() || !out_path.empty())) {
    throw ParseError("--image/--out", "only the decolor-flip example reads or writes images");
  }
  if (example == "permutation-threshold") {
    demo_threshold(out, {0.0, 0.0, 0.0}, exact);
  } else if (example == "bias-counterexample") {
    demo_threshold(out, {-1.0, 0.0, 0.0}, exact);
  } else if (example == "decolor-flip") {
    demo_decolor_flip(out, image_path, out_path);
  } else if (example == "antisymmetry") {
    demo_antisymmetry(out, exact);
  } else {
    throw ParseError("--example", "unknown example '" + example + "'");
  }
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equivariant network construction kit", "eqnn"};
  app.require_subcommand(1);
  bool exact = false;

  std::string config_path;
  int layer = 0;
  bool print = false;
  auto* basis = app.add_subcommand("basis", "Intertwiner dimensions per layer boundary");
  basis->add_option("--config", config_path, "Config file")->required();
  basis->add_option("--layer", layer, "Only this layer (1-based)");
  basis->add_flag("--print", print, "Print the basis matrices");
  basis->add_flag("--exact", exact, "17 significant digits");

  std::string model_path;
  std::size_t trials = 8;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  auto* check = app.add_subcommand("check", "Equivariance check of a saved model");
  check->add_option("--model", model_path, "Model file")->required();
  check->add_option("--trials", trials, "Random inputs (and sampled elements for large groups)");
  check->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);
  check->add_option("--seed", seed, "Seed for test inputs");
  check->add_flag("--exact", exact, "17 significant digits");

  detail::TrainOptions topt;
  auto* trn = app.add_subcommand("train", "Train an equivariant network on a toy task");
  trn->add_option("--task", topt.task, "Task")->required();
  trn->add_option("--m", topt.m, "Number of points");
  trn->add_option("--steps", topt.steps, "Gradient steps")->check(CLI::PositiveNumber);
  trn->add_option("--lr", topt.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  trn->add_option("--seed", topt.seed, "Seed");
  trn->add_option("--out", topt.out, "Write the trained model here");
  trn->add_option("--activation", topt.activation, "relu | tanh | threshold:t | sign_threshold:t");
  trn->add_option("--train-samples", topt.train_samples, "Training set size")->check(CLI::PositiveNumber);
  trn->add_option("--test-samples", topt.test_samples, "Test set size")->check(CLI::PositiveNumber);
  trn->add_flag("--exact", exact, "17 significant digits");

  std::string structure;
  std::size_t k = 0, n = 0, m1 = 0, m2 = 0;
  auto* count = app.add_subcommand("count", "Parameter count of a structured k-layer network");
  count->add_option("--structure", structure, "dense | toeplitz | bttb | circulant")->required();
  count->add_option("--k", k, "Layers")->required()->check(CLI::PositiveNumber);
  count->add_option("--n", n, "Width");
  count->add_option("--m1", m1, "BTTB block count");
  count->add_option("--m2", m2, "BTTB block size");

  std::string example;
  auto* demo = app.add_subcommand("demo", "Run a worked example");
  demo->add_option("--example", example, "permutation-threshold | bias-counterexample | decolor-flip | antisymmetry")
      ->required();
  std::string image_path, image_out;
  demo->add_option("--image", image_path, "decolor-flip: input image ('N 3' text format)");
  demo->add_option("--out", image_out, "decolor-flip: write the decolored image here");
  demo->add_flag("--exact", exact, "17 significant digits");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*basis) return detail::cmd_basis(out, config_path, layer, print, exact);
    if (*check) return detail::cmd_check(out, model_path, trials, tol, seed, exact);
    if (*trn) return detail::cmd_train(out, topt, exact);
    if (*count) return detail::cmd_count(out, structure, k, n, m1, m2);
    if (*demo) return detail::cmd_demo(out, example, image_path, image_out, exact);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace eqnn::cli
