#include "mortarbench/driver.hpp"
#include "mortarbench/error.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace mortarbench;

namespace
{

py::dict triplets( const std::vector<Triplet>& t )
{
   std::vector<int> rows, cols;
   std::vector<double> vals;
   for ( const Triplet& x : t ) {
      rows.push_back( x.row );
      cols.push_back( x.col );
      vals.push_back( x.value );
   }
   py::dict d;
   d["row"] = rows;
   d["col"] = cols;
   d["value"] = vals;
   return d;
}

py::dict report_dict( const MetricsReport& r )
{
   py::dict d;
   d["accumulated_work"] = r.accumulated_work;
   d["accumulated_ghost"] = r.accumulated_ghost;
   d["accumulated_redist"] = r.accumulated_redist;
   d["max_ghost_ma_nodes"] = r.max_ghost_ma_nodes;
   d["rebalances"] = r.rebalances;
   d["verify_ok"] = r.verify_ok;
   py::list steps;
   for ( const StepSummary& s : r.steps ) {
      py::dict row;
      row["step"] = s.step;
      row["C"] = s.C;
      row["eta_t"] = s.eta_t;
      row["eta_e"] = s.eta_e;
      row["rebalanced"] = s.rebalanced;
      row["max_W"] = s.max_W;
      steps.append( row );
   }
   d["steps"] = steps;
   d["slave_nodes"] = r.matrices.slave_nodes;
   d["master_nodes"] = r.matrices.master_nodes;
   d["D"] = triplets( r.matrices.D );
   d["M"] = triplets( r.matrices.M );
   return d;
}

} // namespace

PYBIND11_MODULE( _core, m )
{
   m.doc() = "Instrumented parallel mortar kernels on simulated ranks";

   py::register_exception<Error>( m, "Error", PyExc_RuntimeError );
   py::register_exception<ConfigError>( m, "ConfigError", PyExc_ValueError );

   m.def(
      "run",
      []( const std::string& config_json, const std::string& out_dir ) {
         RunConfig c = parse_run_config( config_json );
         MetricsReport r;
         {
            py::gil_scoped_release release;
            r = run( c );
         }
         if ( !out_dir.empty() ) { write_outputs( r, out_dir ); }
         return report_dict( r );
      },
      py::arg( "config_json" ), py::arg( "out_dir" ) = "", "Run a JSON configuration and return its summary" );

   m.def(
      "metrics_csv",
      []( const std::string& config_json ) {
         const MetricsReport r = run( parse_run_config( config_json ) );
         std::ostringstream out;
         write_metrics_csv( r, out );
         return out.str();
      },
      py::arg( "config_json" ) );

   m.def(
      "slave_counts",
      []( const std::string& scenario, int refine ) {
         ScenarioConfig c;
         c.scenario = scenario;
         c.refine = refine;
         c.steps = 2;
         c.approach_steps = 1;
         const Scenario sc = make_scenario( c );
         return py::make_tuple( sc.slave.num_nodes(), sc.slave.num_elems() );
      },
      py::arg( "scenario" ), py::arg( "refine" ) );

   m.def(
      "rcb_partition",
      []( const std::vector<std::array<double, 3>>& points, int nparts, double tol, const std::vector<double>& weights ) {
         std::vector<Vec3> pts;
         for ( const auto& p : points ) {
            pts.push_back( { p[0], p[1], p[2] } );
         }
         PartitionSpec spec;
         spec.nparts = nparts;
         spec.tol = tol;
         spec.weights = weights;
         return rcb_partition( pts, spec );
      },
      py::arg( "points" ), py::arg( "nparts" ), py::arg( "tol" ) = 1.03, py::arg( "weights" ) = std::vector<double> {} );

   m.def(
      "imbalance_ratio", []( const std::vector<double>& v ) { return imbalance_ratio( v ); }, py::arg( "values" ) );

   m.def(
      "should_rebalance",
      []( double eta_t, double eta_e, double eta_t_hat, double eta_e_hat ) {
         ImbalanceReport r;
         r.eta_t = eta_t;
         r.eta_e = eta_e;
         LbPolicy p;
         p.mode = LbMode::dynamic;
         p.eta_t_hat = eta_t_hat;
         p.eta_e_hat = eta_e_hat;
         return should_rebalance( r, p );
      },
      py::arg( "eta_t" ), py::arg( "eta_e" ), py::arg( "eta_t_hat" ) = 1.8, py::arg( "eta_e_hat" ) = -1.0 );

   m.def(
      "clip_polygons",
      []( const std::vector<std::array<double, 2>>& slave, const std::vector<std::array<double, 2>>& master ) {
         auto conv = []( const std::vector<std::array<double, 2>>& p ) {
            std::vector<Vec2> out;
            for ( const auto& q : p ) {
               out.push_back( { q[0], q[1] } );
            }
            return out;
         };
         std::vector<std::array<double, 2>> out;
         for ( const Vec2& v : clip_polygons( conv( slave ), conv( master ), 1e-12, 1e-14 ) ) {
            out.push_back( { v.x, v.y } );
         }
         return out;
      },
      py::arg( "slave" ), py::arg( "master" ) );

   m.def(
      "triangle_rule",
      []( int order ) {
         const QuadRule& r = triangle_rule( order );
         std::vector<std::array<double, 2>> pts;
         for ( const Vec2& p : r.points ) {
            pts.push_back( { p.x, p.y } );
         }
         return py::make_tuple( pts, r.weights );
      },
      py::arg( "order" ) );
}
