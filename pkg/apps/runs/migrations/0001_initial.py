# Generated by Django 4.2 on 2026-10-19 12:00

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(db_index=True, max_length=32)),
                ('config', models.JSONField(default=dict)),
                ('inputs', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('outputs', models.JSONField(default=list)),
                ('seed', models.PositiveBigIntegerField(blank=True, null=True)),
                ('tool_version', models.CharField(max_length=20)),
                ('wall_time', models.FloatField(default=0.0)),
                ('status', models.CharField(choices=[('SUCCESS', 'Success'), ('FAILED', 'Failed')], default='SUCCESS', max_length=10)),
                ('error_message', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'db_table': 'run_records',
                'ordering': ['-created_at'],
            },
        ),
    ]
