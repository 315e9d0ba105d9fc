from app.components.report.report_generator import ReportGenerator
from app.components.report.report_writer import render_text, write_report

__all__ = ['ReportGenerator', 'render_text', 'write_report']
