# components package
from app.components.report import ReportGenerator, render_text, write_report
