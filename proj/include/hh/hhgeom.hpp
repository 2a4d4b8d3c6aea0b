#pragma once
// Geometric core for expanding hyperheavenly metrics
//   (1/2) ds^2 = phi^-2 (dq dy - dp dx + A dp^2 - 2 Q dq dp + B dq^2).
// Everything is evaluated in the (q,p,x,y) coordinate system; families living
// on substituted charts supply an evaluator that produces the field jets
// there (see catalog). Spinor components follow the conventions fixed by the
// metric identity: lowering v_A = eps_AB v^B with eps_12 = +1,
//   Q^{AB} = [[A,Q],[Q,B]],  Q_AB = [[B,-Q],[-Q,A]],
//   d_A = (d_x, d_y),  d^A = (d_y, -d_x),
//   eth_1 = phi^2(d_q - Q d_x - B d_y),  eth_2 = phi^2(d_p + A d_x + Q d_y),
//   eth^1 = eth_2,                       eth^2 = phi^2(-d_q + Q d_x + B d_y).

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hh/fieldexpr.hpp"
#include "hh/jets.hpp"

namespace hh {

// Coordinate environment a family evaluator runs in: the four native-chart
// coordinates as jets (usually pure coordinate jets at a sample point, but a
// gauge transformation may supply composite jets).
struct CoordEnv {
  ChartName chart;
  int order = 3;
  std::array<Jet, 4> coords;

  static CoordEnv at_point(const Point4& p, int order = 3);
  Point4 point() const;
};

// Field jets of one metric at one point, expressed in hyperheavenly (q,p,x,y)
// coordinates. Optional members carry the derived congruence-generator
// fields where the family defines them.
struct FieldSet {
  Point4 hh_point;          // always chart QPXY
  Jet phi, A, Q, B;         // jets in QPXY coordinates
  std::optional<Jet> zgen;  // ASD generator m ~ [z,1]
  std::optional<Jet> wgen;  // ASD generator n ~ [1,w]
};

class HHData {
 public:
  using Evaluator = std::function<FieldSet(const CoordEnv&)>;

  HHData() = default;
  HHData(ChartName native_chart, Evaluator eval)
      : chart_(native_chart), eval_(std::move(eval)) {}

  ChartName native_chart() const { return chart_; }
  FieldSet fields(const Point4& at, int order = 3) const;
  FieldSet fields(const CoordEnv& env) const { return eval_(env); }

  // Plain hyperheavenly-chart data from four bound expressions.
  static HHData from_exprs(ExprPtr phi, ExprPtr A, ExprPtr Q, ExprPtr B,
                           FieldBinding binding);

 private:
  ChartName chart_ = ChartName::QPXY;
  Evaluator eval_;
};

// 4x4 symmetric matrix of jets: the coefficient matrix of ds^2 (twice the
// half-line-element bracket) in (q,p,x,y) order.
using MetricJets = std::array<std::array<Jet, 4>, 4>;

MetricJets assemble_metric(const FieldSet& f);
MetricJets assemble_metric(const HHData& data, const Point4& at, int order = 3);

// Plebanski frame at a point. Tetrad vectors (coordinate components):
//   D1 = eth^2 = phi^2(-d_q + Q d_x + B d_y),  D2 = -d_y,
//   D3 = eth^1 = phi^2( d_p + A d_x + Q d_y),  D4 = -d_x,
// covectors: e1 = -phi^-2 dq, e2 = -dy + Q dp - B dq,
//            e3 =  phi^-2 dp, e4 = -dx + A dp - Q dq,
// so that ds^2 = 2(e1 e2 + e3 e4) and <e^a, D_b> = delta^a_b.
struct Frame {
  Point4 at;                                // QPXY point
  std::array<std::array<Jet, 4>, 2> d;      // d[0]=d_1=d_x, d[1]=d_2=d_y
  std::array<std::array<Jet, 4>, 2> eth;    // eth_1, eth_2
  std::array<std::array<Jet, 4>, 4> vec;    // D1..D4
  std::array<std::array<Jet, 4>, 4> cov;    // e1..e4
  std::array<double, 2> J;                  // J_A = (phi_x, phi_y)
  // Duality pairing <e^a, D_b> at the point.
  std::array<std::array<double, 4>, 4> pairing() const;
};

Frame frame_vectors(const HHData& data, const Point4& at, int order = 3);
Frame frame_vectors(const FieldSet& f);

// Spinor connection component tables at a point; index D runs over {1,2}.
struct SpinorConnection {
  std::array<double, 2> G111, G112, G121, G122, G221, G222;
  // dotted families, symmetric pair AB in {11,12,22} x D in {1,2}
  std::array<std::array<double, 2>, 3> Gdot1, Gdot2;
};

SpinorConnection connection_closed_form(const HHData& data, const Point4& at, int order = 3);
SpinorConnection connection_closed_form(const FieldSet& f);

struct CurvaturePacket {
  std::array<double, 5> C;     // C^(1)..C^(5); C4=C5=0 for these metrics
  std::array<double, 5> Cdot;  // C_1111, C_1112, C_1122, C_1222, C_2222 (dotted)
  double R = 0;                // curvature scalar
  std::array<std::array<double, 3>, 3> Cab{};  // [AB in 11,12,22][CD dotted]
  double scale = 1;            // max |metric jet coefficient| (for normalization)
};

CurvaturePacket curvature_closed_form(const HHData& data, const Point4& at, int order = 3);
CurvaturePacket curvature_closed_form(const FieldSet& f);

// Conventions resolving the oracle's raw tetrad contractions into the packet
// labels. Determined once by exhaustive search against the closed forms.
struct ConventionTable {
  double k_sd = 0, k_asd = 0, k_r = 0, k_mix = 0;
  bool rev_u = false, alt_u = false;   // undotted Weyl map
  bool rev_d = false, alt_d = false;   // dotted Weyl map
  bool rev_mu = false, alt_mu = false; // traceless Ricci, undotted pair
  bool rev_md = false, alt_md = false; // traceless Ricci, dotted pair
  std::array<double, 5> quartic_weights{1, 4, 6, 4, 1};
  std::string source;  // provenance note
  bool valid() const { return k_sd != 0; }

  std::string to_json() const;
  static ConventionTable from_json(const std::string& text);
};

// Raw, convention-free output of the generic curvature path.
struct OracleCurvature {
  std::array<std::array<double, 4>, 4> g{}, ginv{}, ricci{}, traceless_ricci{};
  double ricci_scalar = 0;
  double riemann[4][4][4][4] = {};  // fully lowered
  double weyl[4][4][4][4] = {};
  std::array<double, 5> raw_u{}, raw_d{};          // tetrad Weyl contractions
  std::array<std::array<double, 3>, 3> raw_mix{};  // tetrad Ricci contractions
  double bianchi_residual = 0;     // max |first Bianchi| over index triples
  double weyl_trace_residual = 0;  // max |g^{ac} C_{abcd}|
  double scale = 1;

  // Mixed traceless Ricci endomorphism (for eigen analysis).
  std::array<std::array<double, 4>, 4> mixed_traceless_ricci() const;
  // Assemble the packet using a calibrated table.
  CurvaturePacket packet(const ConventionTable& t) const;
};

OracleCurvature curvature_oracle(const HHData& data, const Point4& at, int order = 3);
OracleCurvature curvature_oracle_from_metric(const MetricJets& g, const FieldSet& f);

ConventionTable calibrate_conventions(const HHData& family, const std::vector<Point4>& sample);

}  // namespace hh
