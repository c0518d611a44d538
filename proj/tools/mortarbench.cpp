// Command-line entry point: `mortarbench run` and `mortarbench compare`.

#include "mortarbench/driver.hpp"
#include "mortarbench/error.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mortarbench;

int main( int argc, char** argv )
{
   CLI::App app { "Instrumented parallel mortar kernels on simulated ranks" };
   app.require_subcommand( 1 );

   auto* run_cmd = app.add_subcommand( "run", "Run one configuration and write metrics" );
   std::string config_path;
   int ranks = -1;
   std::string ghosting, lb, basis, out_dir;
   double eta_t = -1.0, eta_e = -1.0, part_tol = -1.0;
   int quad_order = -1, threads = -1;
   std::int64_t seed = -1;
   bool verify = false, wall_clock = false, matrices = false, vtk = false;
   run_cmd->add_option( "--config", config_path, "JSON run configuration" )->required()->check( CLI::ExistingFile );
   run_cmd->add_option( "--ranks", ranks, "Number of simulated ranks" );
   run_cmd->add_option( "--ghosting", ghosting, "redundant | binning | roundrobin" );
   run_cmd->add_option( "--lb", lb, "none | static | dynamic" );
   run_cmd->add_option( "--eta-t", eta_t, "Work imbalance threshold" );
   run_cmd->add_option( "--eta-e", eta_e, "Element imbalance threshold (defaults to --eta-t)" );
   run_cmd->add_option( "--part-tol", part_tol, "Partitioner imbalance tolerance" );
   run_cmd->add_option( "--basis", basis, "standard | dual" );
   run_cmd->add_option( "--quad-order", quad_order, "Triangle rule degree" );
   run_cmd->add_option( "--seed", seed, "Rank scheduling seed" );
   run_cmd->add_option( "--threads", threads, "Worker threads for rank execution" );
   run_cmd->add_option( "--out", out_dir, "Output directory" );
   run_cmd->add_flag( "--verify", verify, "Check every step against a serial assembly" );
   run_cmd->add_flag( "--wall-clock", wall_clock, "Record measured evaluation time in t_p" );
   run_cmd->add_flag( "--matrices", matrices, "Write D.mtx and M.mtx" );
   run_cmd->add_flag( "--vtk", vtk, "Write slave.vtk and master.vtk" );

   auto* cmp_cmd = app.add_subcommand( "compare", "Run several configurations of one scenario side by side" );
   std::vector<std::string> config_paths;
   cmp_cmd->add_option( "--configs", config_paths, "JSON run configurations" )
      ->required()
      ->check( CLI::ExistingFile );

   CLI11_PARSE( app, argc, argv );

   try {
      if ( *run_cmd ) {
         RunConfig c = load_run_config( config_path );
         if ( ranks >= 0 ) { c.nranks = ranks; }
         if ( !ghosting.empty() ) { c.ghosting = ghosting_from_string( ghosting ); }
         if ( !lb.empty() ) { c.lb.mode = lb_mode_from_string( lb ); }
         if ( eta_t >= 0.0 ) { c.lb.eta_t_hat = eta_t; }
         if ( eta_e >= 0.0 ) { c.lb.eta_e_hat = eta_e; }
         if ( part_tol >= 0.0 ) { c.lb.part_tol = part_tol; }
         if ( !basis.empty() ) { c.mortar.basis = basis_from_string( basis ); }
         if ( quad_order >= 0 ) { c.mortar.quad_order = quad_order; }
         if ( seed >= 0 ) { c.seed = static_cast<std::uint64_t>( seed ); }
         if ( threads >= 0 ) { c.threads = threads; }
         if ( !out_dir.empty() ) { c.out_dir = out_dir; }
         c.verify = c.verify || verify;
         c.wall_clock = c.wall_clock || wall_clock;
         c.write_matrices = c.write_matrices || matrices;
         c.write_vtk = c.write_vtk || vtk;
         if ( c.out_dir.empty() ) { c.out_dir = "mortarbench_out"; }

         const MetricsReport r = run( c );
         write_outputs( r, c.out_dir );
         std::cout << "steps " << r.steps.size() << ", accumulated work " << r.accumulated_work << ", ghost cost "
                   << r.accumulated_ghost << ", rebalances " << r.rebalances << " -> " << c.out_dir << '\n';
         if ( c.verify && !r.verify_ok ) {
            for ( const std::string& f : r.verify_failures ) {
               std::cerr << "verify: " << f << '\n';
            }
            return 1;
         }
         return 0;
      }
      std::vector<RunConfig> configs;
      for ( const std::string& p : config_paths ) {
         configs.push_back( load_run_config( p ) );
      }
      write_comparison( compare( configs ), std::cout );
      return 0;
   } catch ( const Error& e ) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
   }
}
